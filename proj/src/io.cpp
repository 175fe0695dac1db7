#include "ergostab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "ergostab/error.hpp"

namespace ergostab {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw IoError("CsvTable: header must not be empty");
}

CsvTable::Row CsvTable::row() {
  rows_.emplace_back();
  rows_.back().reserve(header_.size());
  return Row(rows_.back());
}

CsvTable::Row& CsvTable::Row::add(double value) {
  fields_.push_back(format_double(value));
  return *this;
}
CsvTable::Row& CsvTable::Row::add(std::int64_t value) {
  fields_.push_back(std::to_string(value));
  return *this;
}
CsvTable::Row& CsvTable::Row::add(std::uint64_t value) {
  fields_.push_back(std::to_string(value));
  return *this;
}
CsvTable::Row& CsvTable::Row::add(bool value) {
  fields_.push_back(value ? "1" : "0");
  return *this;
}
CsvTable::Row& CsvTable::Row::add(std::string_view value) {
  fields_.push_back(csv_quote(value));
  return *this;
}
CsvTable::Row& CsvTable::Row::add(const std::optional<std::size_t>& value) {
  fields_.push_back(value ? std::to_string(*value) : std::string());
  return *this;
}
CsvTable::Row& CsvTable::Row::empty() {
  fields_.emplace_back();
  return *this;
}

std::string CsvTable::render() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  std::vector<std::string> quoted;
  quoted.reserve(header_.size());
  for (const auto& h : header_) quoted.push_back(csv_quote(h));
  line(quoted);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != header_.size()) {
      throw IoError("CsvTable: row " + std::to_string(r) + " has " +
                    std::to_string(rows_[r].size()) + " fields, expected " +
                    std::to_string(header_.size()));
    }
    line(rows_[r]);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string render_json(const Json& value) { return value.dump(2) + "\n"; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Eigen::VectorXd vector_from_json(const Json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

Json to_json(const Sample& sample) {
  return Json{{"x", vector_json(sample.x)}, {"y", sample.y}};
}

Json to_json(const Teacher& teacher) {
  return Json{{"kind", std::string(to_string(teacher.kind))},
              {"weights", vector_json(teacher.weights)},
              {"noise", teacher.noise}};
}

Json to_json(const SyntheticDataset& dataset) {
  Json meta{{"n", dataset.n},
            {"d", dataset.d},
            {"p", dataset.p},
            {"seed", dataset.seed},
            {"teacher", to_json(dataset.teacher)},
            {"row_layout", "x_1..x_d, y"}};
  Json rows = Json::array();
  for (const auto& s : dataset.samples) {
    Json r = vector_json(s.x);
    r.push_back(s.y);
    rows.push_back(std::move(r));
  }
  Json corrupted = Json::array();
  for (auto c : dataset.corrupted) corrupted.push_back(c != 0);
  return Json{{"metadata", std::move(meta)},
              {"samples", std::move(rows)},
              {"clean_labels", dataset.clean_labels},
              {"corrupted", std::move(corrupted)}};
}

SyntheticDataset dataset_from_json(const Json& doc) {
  try {
    SyntheticDataset ds;
    const Json& meta = doc.at("metadata");
    ds.n = meta.at("n").get<std::size_t>();
    ds.d = meta.at("d").get<std::size_t>();
    ds.p = meta.at("p").get<double>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    const Json& t = meta.at("teacher");
    ds.teacher.kind = parse_teacher_kind(t.at("kind").get<std::string>());
    ds.teacher.weights = vector_from_json(t.at("weights"));
    ds.teacher.noise = t.at("noise").get<double>();
    const Json& rows = doc.at("samples");
    if (rows.size() != ds.n) throw IoError("dataset: sample count does not match n");
    ds.samples.reserve(ds.n);
    for (const auto& r : rows) {
      if (r.size() != ds.d + 1) throw IoError("dataset: row length does not match d + 1");
      Sample s;
      s.x.resize(static_cast<Eigen::Index>(ds.d));
      for (std::size_t j = 0; j < ds.d; ++j) s.x(static_cast<Eigen::Index>(j)) = r[j].get<double>();
      s.y = r[ds.d].get<double>();
      ds.samples.push_back(std::move(s));
    }
    ds.clean_labels = doc.at("clean_labels").get<std::vector<double>>();
    for (const auto& c : doc.at("corrupted")) ds.corrupted.push_back(c.get<bool>() ? 1 : 0);
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("dataset: malformed document: ") + e.what());
  }
}

Json to_json(const StabilityReport& report) {
  Json protocol{{"pairs", report.pairs.size()},
                {"runup", report.protocol.runup},
                {"window", report.protocol.window},
                {"inits_per_side", report.protocol.inits_per_side},
                {"shared_probes", report.shared_probes},
                {"include_swapped_points", report.protocol.include_swapped_points},
                {"statistic", std::string(to_string(report.protocol.statistic))},
                {"eta", report.optimizer.eta},
                {"momentum", report.optimizer.momentum},
                {"batch_size", report.optimizer.batch_size},
                {"mode", report.optimizer.mode == OptimizerMode::GD ? "gd" : "sgd"},
                {"master_seed", report.master_seed}};
  Json pairs = Json::array();
  for (const auto& p : report.pairs) {
    Json j{{"pair_id", p.pair_id}, {"valid", p.valid}};
    if (p.valid) {
      j["max_diff"] = p.max_diff;
      j["mean_diff"] = p.mean_diff;
      j["sem"] = p.sem;
      j["diffs"] = p.diffs;
    }
    pairs.push_back(std::move(j));
  }
  return Json{{"estimator", "SAS lower bound"},
              {"protocol", std::move(protocol)},
              {"valid_pairs", report.valid_pairs},
              {"beta_hat", report.beta_hat},
              {"pairs", std::move(pairs)}};
}

CsvTable stability_csv(const StabilityReport& report) {
  CsvTable t({"pair_id", "probe_id", "diff"});
  for (const auto& p : report.pairs) {
    for (std::size_t q = 0; q < p.diffs.size(); ++q) {
      t.row().add(std::uint64_t{p.pair_id}).add(std::uint64_t{q}).add(p.diffs[q]);
    }
  }
  return t;
}

Json to_json(const TransitionMatrix& matrix) {
  Json empty_rows = Json::array();
  for (std::size_t i = 0; i < matrix.empty_rows.size(); ++i) {
    if (matrix.empty_rows[i]) empty_rows.push_back(i);
  }
  return Json{{"kind", "Markov surrogate (Ulam)"},
              {"bins", matrix.partition.bins},
              {"lower", matrix.partition.lower},
              {"upper", matrix.partition.upper},
              {"smoothing", matrix.smoothing},
              {"transitions", matrix.transitions},
              {"clamped", matrix.clamped},
              {"empty_rows", std::move(empty_rows)},
              {"probabilities", matrix_json(matrix.probabilities)},
              {"counts", matrix_json(matrix.counts)}};
}

Json to_json(const SpectralReport& spectrum) {
  return Json{{"lambda1", spectrum.lambda1},
              {"lambda2", spectrum.lambda2},
              {"gap", spectrum.gap},
              {"dense", spectrum.dense},
              {"moduli", spectrum.moduli},
              {"stationary", vector_json(spectrum.stationary)}};
}

CsvTable spectrum_csv(const SpectralReport& spectrum) {
  CsvTable t({"mode_index", "modulus"});
  for (std::size_t i = 0; i < spectrum.moduli.size(); ++i) {
    t.row().add(std::uint64_t{i}).add(spectrum.moduli[i]);
  }
  return t;
}

Json to_json(const BoundReport& bound) {
  Json j{{"empirical_risk", bound.empirical_risk}};
  if (bound.population_risk) j["population_risk"] = *bound.population_risk;
  if (bound.gap) j["gap"] = *bound.gap;
  j["beta"] = bound.beta;
  j["L"] = bound.L;
  j["n"] = bound.n;
  j["delta"] = bound.delta;
  j["stability_term"] = bound.stability_term;
  j["concentration_term"] = bound.concentration_term;
  j["bound"] = bound.bound;
  j["bound_gap"] = bound.bound - bound.empirical_risk;
  return j;
}

Json to_json(const WeylReport& weyl) {
  return Json{{"inverse_difference_norm", weyl.inverse_difference_norm},
              {"inverse_theta_min_base", weyl.inverse_theta_min_base},
              {"inverse_theta_min_perturbed", weyl.inverse_theta_min_perturbed},
              {"kernel_difference_norm", weyl.kernel_difference_norm},
              {"eigen_shifts", weyl.eigen_shifts},
              {"residuals", weyl.residuals},
              {"max_slack", weyl.max_slack}};
}

}  // namespace ergostab
