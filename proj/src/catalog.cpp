#include "ensel/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "ensel/csv.hpp"
#include "ensel/error.hpp"

namespace ensel {
namespace {

void expect_header(const csv::Row& row, std::initializer_list<std::string_view> names) {
  bool ok = row.fields.size() == names.size() && std::equal(names.begin(), names.end(), row.fields.begin());
  if (!ok) {
    std::string want;
    for (auto n : names) want += (want.empty() ? "" : ",") + std::string(n);
    throw Error(ErrorKind::validation, fmt::format("line {}: expected header '{}'", row.line, want));
  }
}

struct ProfileFile {
  ClassProfile profile;
  std::optional<double> budget;
};

ProfileFile parse_profile_file(std::istream& in) {
  auto rows = csv::read_rows(in);
  ProfileFile out;
  std::optional<long long> k;
  std::size_t i = 0;
  for (; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    if (f.size() != 1 || f[0].find('=') == std::string::npos) break;
    auto key = f[0].substr(0, f[0].find('='));
    auto value = std::string_view(f[0]).substr(f[0].find('=') + 1);
    if (key == "K") {
      k = csv::parse_int(value, rows[i].line);
    } else if (key == "B") {
      out.budget = csv::parse_double(value, rows[i].line);
    } else {
      throw Error(ErrorKind::validation, fmt::format("line {}: unknown metadata key '{}'", rows[i].line, key));
    }
  }
  if (!k) throw Error(ErrorKind::validation, "profile: missing 'K=<int>' metadata line");
  out.profile.class_count = static_cast<int>(*k);
  if (i >= rows.size()) throw Error(ErrorKind::validation, "profile: missing header line");
  expect_header(rows[i], {"model_id", "success_prob", "query_cost"});
  for (++i; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 3)
      throw Error(ErrorKind::validation, fmt::format("line {}: expected 3 fields", r.line));
    out.profile.models.push_back(
        {r.fields[0], csv::parse_double(r.fields[1], r.line), csv::parse_double(r.fields[2], r.line)});
  }
  out.profile = validate_profile(std::move(out.profile));
  return out;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::validation, fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream create_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::validation, fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

std::vector<ModelSpec> parse_catalog(std::istream& in) {
  auto rows = csv::read_rows(in);
  std::vector<ModelSpec> specs;
  if (rows.empty()) throw Error(ErrorKind::validation, "catalog: missing header");
  expect_header(rows.front(), {"id", "price_in", "price_out"});
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 3)
      throw Error(ErrorKind::validation, fmt::format("line {}: expected 3 fields", r.line));
    ModelSpec s{r.fields[0], csv::parse_double(r.fields[1], r.line), csv::parse_double(r.fields[2], r.line)};
    if (s.id.empty()) throw Error(ErrorKind::validation, fmt::format("line {}: empty id", r.line));
    if (s.price_in < 0 || s.price_out < 0)
      throw Error(ErrorKind::validation, fmt::format("line {}: negative price", r.line));
    if (!seen.insert(s.id).second)
      throw Error(ErrorKind::validation, fmt::format("line {}: duplicate id '{}'", r.line, s.id));
    specs.push_back(std::move(s));
  }
  return specs;
}

std::vector<ModelSpec> load_catalog(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_catalog(in);
}

void write_catalog(std::ostream& out, std::span<const ModelSpec> specs) {
  out << "id,price_in,price_out\n";
  for (const auto& s : specs) out << fmt::format("{},{},{}\n", s.id, s.price_in, s.price_out);
}

void save_catalog(const std::filesystem::path& path, std::span<const ModelSpec> specs) {
  auto out = create_or_throw(path);
  write_catalog(out, specs);
}

double query_cost_from_tokens(const ModelSpec& spec, std::uint64_t in_tokens, std::uint64_t out_tokens) noexcept {
  return static_cast<double>(in_tokens) * spec.price_in / 1e6 +
         static_cast<double>(out_tokens) * spec.price_out / 1e6;
}

double ClassProfile::min_prob() const {
  double m = 1.0;
  for (const auto& e : models) m = std::min(m, e.success_prob);
  return m;
}

double ClassProfile::total_cost(std::span<const ModelIndex> subset) const {
  std::vector<double> costs(models.size(), 0.0);
  for (auto i : subset) costs[i] = models[i].query_cost;
  return canonical_cost(costs);
}

double canonical_cost(std::span<const double> costs_by_model) {
  double c = 0.0;
  for (double v : costs_by_model) c += v;
  return c;
}

std::optional<ModelIndex> ClassProfile::index_of(std::string_view model_id) const {
  for (ModelIndex i = 0; i < models.size(); ++i)
    if (models[i].model_id == model_id) return i;
  return std::nullopt;
}

double clamp_probability(double p) noexcept { return std::clamp(p, kProbFloor, kProbCap); }

ClassProfile validate_profile(ClassProfile profile) {
  if (profile.class_count < 2)
    throw Error(ErrorKind::validation, fmt::format("profile: class count K={} must be >= 2", profile.class_count));
  if (profile.models.empty()) throw Error(ErrorKind::validation, "profile: no models");
  std::set<std::string> seen;
  for (auto& m : profile.models) {
    if (!(m.query_cost > 0.0))
      throw Error(ErrorKind::validation, fmt::format("profile: model '{}' has non-positive cost", m.model_id));
    if (!(m.success_prob >= 0.0 && m.success_prob <= 1.0))
      throw Error(ErrorKind::validation,
                  fmt::format("profile: model '{}' probability {} outside [0,1]", m.model_id, m.success_prob));
    if (!seen.insert(m.model_id).second)
      throw Error(ErrorKind::validation, fmt::format("profile: duplicate model id '{}'", m.model_id));
    m.success_prob = clamp_probability(m.success_prob);
  }
  return profile;
}

ClassProfile parse_profile(std::istream& in) { return parse_profile_file(in).profile; }

ClassProfile load_profile(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_profile(in);
}

void write_profile(std::ostream& out, const ClassProfile& profile, std::optional<double> budget) {
  out << "K=" << profile.class_count << '\n';
  if (budget) out << fmt::format("B={}\n", *budget);
  out << "model_id,success_prob,query_cost\n";
  for (const auto& m : profile.models) out << fmt::format("{},{},{}\n", m.model_id, m.success_prob, m.query_cost);
}

void save_profile(const std::filesystem::path& path, const ClassProfile& profile) {
  auto out = create_or_throw(path);
  write_profile(out, profile);
}

SelectionProblem parse_problem(std::istream& in) {
  auto file = parse_profile_file(in);
  if (!file.budget) throw Error(ErrorKind::validation, "problem: missing 'B=<budget>' metadata line");
  if (!(*file.budget > 0.0)) throw Error(ErrorKind::validation, "problem: budget must be positive");
  return {std::move(file.profile), *file.budget};
}

SelectionProblem load_problem(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_problem(in);
}

std::string format_ids(const ClassProfile& profile, std::span<const ModelIndex> subset, char sep) {
  std::string out;
  for (auto i : subset) {
    if (!out.empty()) out += sep;
    out += profile.id(i);
  }
  return out;
}

}  // namespace ensel
