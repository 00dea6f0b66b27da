#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trajeval/report/report.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::report {

using nlohmann::json;

// ---- number formats ------------------------------------------------------------

std::string fmt_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string fmt_distance(double value) { return fmt_fixed(value, 3); }

std::string fmt_percent(double fraction) { return fmt_fixed(fraction * 100.0, 1) + "%"; }

std::string fmt_mean_std(const stats::Summary& s) {
  if (s.n == 0) return "--";
  return fmt_fixed(s.mean, 2) + " (" + fmt_fixed(s.std, 2) + ")";
}

std::string fmt_pass_rate(const stats::Summary& s) {
  if (s.n == 0) return "--";
  return fmt_fixed(s.mean * 100.0, 1) + " (" + fmt_fixed(s.std, 2) + ")";
}

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

std::string ctx_label(std::optional<bool> ctx) {
  if (!ctx) return "--";
  return *ctx ? "T" : "F";
}

std::string ctx_csv(std::optional<bool> ctx) { return ctx ? (*ctx ? "T" : "F") : ""; }

std::string fmt_mae(const std::optional<MaeCell>& m) { return m ? fmt_fixed(m->value, 2) : "--"; }

// ---- JSON ------------------------------------------------------------------------

json opt_bool(std::optional<bool> b) { return b ? json(*b) : json(nullptr); }

std::optional<bool> get_opt_bool(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<bool>();
}

json summary_json(const stats::Summary& s) { return {{"n", s.n}, {"mean", s.mean}, {"std", s.std}}; }

stats::Summary summary_from(const json& j) {
  return {j.at("n").get<std::size_t>(), j.at("mean").get<double>(), j.at("std").get<double>()};
}

json mae_json(const std::optional<MaeCell>& m) {
  if (!m) return nullptr;
  return {{"value", m->value}, {"pairs", m->pairs}, {"skipped", m->skipped}};
}

std::optional<MaeCell> mae_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return MaeCell{it->at("value").get<double>(), it->at("pairs").get<std::size_t>(),
                 it->at("skipped").get<std::size_t>()};
}

json report_json(const Report& r) {
  json j;
  const Metadata& m = r.meta;
  json meta;
  meta["tool_version"] = m.tool_version;
  meta["split"] = m.split;
  meta["config_digest"] = m.config_digest;
  meta["corpora"] = json::array();
  for (const auto& c : m.corpora)
    meta["corpora"].push_back({{"name", c.name},
                               {"experiment", c.experiment},
                               {"context", opt_bool(c.context)},
                               {"sha256", c.sha256},
                               {"submissions", c.submissions}});
  meta["style_model"] = m.style_model ? json::parse(m.style_model->to_json()) : json(nullptr);
  if (m.style_model) meta["style_model_digest"] = m.style_model->digest();
  meta["settings"] = m.settings;
  meta["interpretations"] = m.interpretations;
  meta["notices"] = m.notices;
  meta["exclusions"] = json::array();
  for (const auto& e : m.exclusions)
    meta["exclusions"].push_back(
        {{"population", e.population}, {"metric", e.metric}, {"reason", e.reason}, {"count", e.count}});
  j["meta"] = std::move(meta);

  if (r.table1) {
    j["table1"] = json::array();
    for (const auto& row : *r.table1)
      j["table1"].push_back({{"model", row.model},
                             {"stage", row.stage},
                             {"context", row.context},
                             {"knn_distance", row.knn_distance},
                             {"knn_coverage", row.knn_coverage},
                             {"n_students", row.n_students},
                             {"n_generated", row.n_generated}});
  }
  if (r.table2) {
    j["table2"] = json::array();
    for (const auto& row : *r.table2)
      j["table2"].push_back({{"model", row.model},
                             {"stage", row.stage},
                             {"context", opt_bool(row.context)},
                             {"violations", summary_json(row.violations)},
                             {"violations_mae", mae_json(row.violations_mae)},
                             {"style", summary_json(row.style)},
                             {"style_mae", mae_json(row.style_mae)}});
  }
  if (r.table3) {
    j["table3"] = json::array();
    for (const auto& row : *r.table3)
      j["table3"].push_back({{"model", row.model},
                             {"context", opt_bool(row.context)},
                             {"pass_rate", summary_json(row.pass_rate)},
                             {"pass_rate_mae", mae_json(row.pass_rate_mae)},
                             {"violations", summary_json(row.violations)},
                             {"violations_mae", mae_json(row.violations_mae)},
                             {"style", summary_json(row.style)},
                             {"style_mae", mae_json(row.style_mae)},
                             {"cosine_distance", mae_json(row.cosine_distance)}});
  }
  if (r.error_distributions) {
    j["error_distributions"] = json::array();
    for (const auto& row : *r.error_distributions) {
      json counts, props;
      for (auto t : functional::kErrorTypes) {
        counts[std::string(functional::to_string(t))] = row.dist.counts[static_cast<int>(t)];
        props[std::string(functional::to_string(t))] = row.dist.proportions[static_cast<int>(t)];
      }
      j["error_distributions"].push_back({{"population", row.population},
                                          {"stage", row.stage},
                                          {"context", opt_bool(row.context)},
                                          {"group", row.dist.group},
                                          {"counts", counts},
                                          {"total", row.dist.total},
                                          {"unknown", row.dist.unknown},
                                          {"proportions", props}});
    }
  }
  if (r.progress) {
    j["progress"] = json::array();
    for (const auto& row : *r.progress) {
      json bins = json::array();
      for (const auto& b : row.curve.bins)
        bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count},
                        {"mean", b.mean ? json(*b.mean) : json(nullptr)}});
      j["progress"].push_back({{"population", row.population},
                               {"context", opt_bool(row.context)},
                               {"metric", row.curve.metric},
                               {"bins", bins}});
    }
  }
  if (r.embed2d) {
    j["embed2d"] = json::array();
    for (const auto& b : *r.embed2d) {
      json pts = json::array();
      for (const auto& p : b.points)
        pts.push_back({{"key", p.key}, {"population", p.population}, {"x", p.x}, {"y", p.y}});
      j["embed2d"].push_back({{"stage", b.stage}, {"explained", b.explained}, {"points", pts}});
    }
  }
  return j;
}

// Floats rounded to 10 significant digits so the digest survives tiny
// floating-point noise across platforms.
void canonicalize(json& j) {
  if (j.is_number_float()) {
    double v = std::stod(fmt_num(j.get<double>()));
    j = v;
  } else if (j.is_structured()) {
    for (auto& child : j) canonicalize(child);
  }
}

std::string digest_of(json j) {
  j.erase("digest");
  canonicalize(j);
  return util::sha256_hex(j.dump());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

// ---- markdown ----------------------------------------------------------------------

class MdTable {
 public:
  explicit MdTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  void write(std::ostream& out) const {
    line(out, header_);
    out << "|";
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
    out << "\n";
    for (const auto& r : rows_) line(out, r);
    out << "\n";
  }

 private:
  static void line(std::ostream& out, const std::vector<std::string>& cells) {
    out << "|";
    for (const auto& c : cells) out << " " << c << " |";
    out << "\n";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string bin_label(const stats::ProgressBin& b) { return fmt_fixed(b.lo, 1) + "-" + fmt_fixed(b.hi, 1); }

}  // namespace

std::string to_json(const Report& report) {
  json j = report_json(report);
  j["digest"] = digest_of(j);
  return j.dump(2) + "\n";
}

std::string digest(const Report& report) { return digest_of(report_json(report)); }

Report from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("report is not valid JSON: ") + e.what());
  }
  Report r;
  try {
    const json& meta = j.at("meta");
    Metadata& m = r.meta;
    m.tool_version = meta.at("tool_version").get<std::string>();
    m.split = meta.at("split").get<std::string>();
    m.config_digest = meta.at("config_digest").get<std::string>();
    for (const auto& c : meta.at("corpora"))
      m.corpora.push_back({c.at("name").get<std::string>(), c.at("experiment").get<std::string>(),
                           get_opt_bool(c, "context"), c.at("sha256").get<std::string>(),
                           c.at("submissions").get<std::size_t>()});
    if (auto it = meta.find("style_model"); it != meta.end() && !it->is_null())
      m.style_model = stats::StyleScoreModel::from_json(it->dump());
    m.settings = meta.at("settings").get<std::map<std::string, std::string>>();
    m.interpretations = meta.at("interpretations").get<std::map<std::string, std::string>>();
    m.notices = meta.at("notices").get<std::vector<std::string>>();
    for (const auto& e : meta.at("exclusions"))
      m.exclusions.push_back({e.at("population").get<std::string>(), e.at("metric").get<std::string>(),
                              e.at("reason").get<std::string>(), e.at("count").get<std::size_t>()});

    if (auto it = j.find("table1"); it != j.end()) {
      r.table1.emplace();
      for (const auto& row : *it)
        r.table1->push_back({row.at("model").get<std::string>(), row.at("stage").get<std::string>(),
                             row.at("context").get<bool>(), row.at("knn_distance").get<double>(),
                             row.at("knn_coverage").get<double>(), row.at("n_students").get<std::size_t>(),
                             row.at("n_generated").get<std::size_t>()});
    }
    if (auto it = j.find("table2"); it != j.end()) {
      r.table2.emplace();
      for (const auto& row : *it)
        r.table2->push_back({row.at("model").get<std::string>(), row.at("stage").get<std::string>(),
                             get_opt_bool(row, "context"), summary_from(row.at("violations")),
                             mae_from(row, "violations_mae"), summary_from(row.at("style")),
                             mae_from(row, "style_mae")});
    }
    if (auto it = j.find("table3"); it != j.end()) {
      r.table3.emplace();
      for (const auto& row : *it) {
        Table3Row t;
        t.model = row.at("model").get<std::string>();
        t.context = get_opt_bool(row, "context");
        t.pass_rate = summary_from(row.at("pass_rate"));
        t.pass_rate_mae = mae_from(row, "pass_rate_mae");
        t.violations = summary_from(row.at("violations"));
        t.violations_mae = mae_from(row, "violations_mae");
        t.style = summary_from(row.at("style"));
        t.style_mae = mae_from(row, "style_mae");
        t.cosine_distance = mae_from(row, "cosine_distance");
        r.table3->push_back(std::move(t));
      }
    }
    if (auto it = j.find("error_distributions"); it != j.end()) {
      r.error_distributions.emplace();
      for (const auto& row : *it) {
        ErrorDistRow e;
        e.population = row.at("population").get<std::string>();
        e.stage = row.at("stage").get<std::string>();
        e.context = get_opt_bool(row, "context");
        e.dist.group = row.at("group").get<std::string>();
        e.dist.total = row.at("total").get<std::size_t>();
        e.dist.unknown = row.at("unknown").get<std::size_t>();
        for (auto t : functional::kErrorTypes) {
          std::string name(functional::to_string(t));
          e.dist.counts[static_cast<int>(t)] = row.at("counts").at(name).get<std::size_t>();
          e.dist.proportions[static_cast<int>(t)] = row.at("proportions").at(name).get<double>();
        }
        r.error_distributions->push_back(std::move(e));
      }
    }
    if (auto it = j.find("progress"); it != j.end()) {
      r.progress.emplace();
      for (const auto& row : *it) {
        ProgressRow p;
        p.population = row.at("population").get<std::string>();
        p.context = get_opt_bool(row, "context");
        p.curve.metric = row.at("metric").get<std::string>();
        for (const auto& b : row.at("bins")) {
          stats::ProgressBin bin{b.at("lo").get<double>(), b.at("hi").get<double>(), b.at("count").get<std::size_t>(),
                                 std::nullopt};
          if (!b.at("mean").is_null()) bin.mean = b.at("mean").get<double>();
          p.curve.bins.push_back(bin);
        }
        r.progress->push_back(std::move(p));
      }
    }
    if (auto it = j.find("embed2d"); it != j.end()) {
      r.embed2d.emplace();
      for (const auto& b : *it) {
        ProjectionBlock block;
        block.stage = b.at("stage").get<std::string>();
        block.explained = b.at("explained").get<std::array<double, 2>>();
        for (const auto& p : b.at("points"))
          block.points.push_back({p.at("key").get<std::string>(), p.at("population").get<std::string>(),
                                  p.at("x").get<double>(), p.at("y").get<double>()});
        r.embed2d->push_back(std::move(block));
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("report JSON does not match the expected layout: ") + e.what());
  }
  if (auto it = j.find("digest"); it != j.end() && it->get<std::string>() != digest(r))
    throw Error("report digest mismatch: the file was modified after it was written");
  return r;
}

std::string to_markdown(const Report& r) {
  std::ostringstream out;
  const Metadata& m = r.meta;
  out << "# Trajectory evaluation report\n\n";
  out << "- tool version: " << m.tool_version << "\n";
  out << "- split: " << m.split << "\n";
  out << "- config digest: `" << m.config_digest << "`\n";
  out << "- report digest: `" << digest(r) << "`\n";
  if (m.style_model) out << "- style model: `" << m.style_model->digest() << "`\n";
  out << "\n";

  MdTable corpora({"Corpus", "Experiment", "Context", "Submissions", "SHA-256"});
  for (const auto& c : m.corpora)
    corpora.row({c.name, c.experiment.empty() ? "--" : c.experiment, ctx_label(c.context),
                 std::to_string(c.submissions), "`" + c.sha256.substr(0, 16) + "`"});
  corpora.write(out);

  if (r.table1) {
    out << "## KNN distance and coverage\n\n";
    MdTable t({"Model", "Stage", "Context", "Avg. KNN Dist.", "KNN Cov."});
    for (const auto& row : *r.table1)
      t.row({row.model, row.stage, row.context ? "T" : "F", fmt_distance(row.knn_distance),
             fmt_percent(row.knn_coverage)});
    t.write(out);
  }
  if (r.table2) {
    out << "## Style by stage\n\n";
    MdTable t({"Model", "Bin", "Context", "PEP 8 Viol. Mean (Std)", "PEP 8 Viol. MAE", "Style Score Mean (Std)",
               "Style Score MAE"});
    for (const auto& row : *r.table2)
      t.row({row.model, row.stage, ctx_label(row.context), fmt_mean_std(row.violations), fmt_mae(row.violations_mae),
             fmt_mean_std(row.style), fmt_mae(row.style_mae)});
    t.write(out);
  }
  if (r.table3) {
    out << "## Next-attempt generation\n\n";
    MdTable t({"Model", "Context", "Pass Rate (%) Mean (Std)", "Pass Rate MAE", "PEP 8 Viol. Mean (Std)",
               "PEP 8 Viol. MAE", "Style Score Mean (Std)", "Style Score MAE", "Cosine Dist. MAE"});
    for (const auto& row : *r.table3)
      t.row({row.model, ctx_label(row.context), fmt_pass_rate(row.pass_rate), fmt_mae(row.pass_rate_mae),
             fmt_mean_std(row.violations), fmt_mae(row.violations_mae), fmt_mean_std(row.style),
             fmt_mae(row.style_mae), fmt_mae(row.cosine_distance)});
    t.write(out);
  }
  if (r.error_distributions) {
    out << "## Error types\n\n";
    MdTable t({"Population", "Stage", "Context", "n", "no_error", "logical", "runtime", "compile", "unknown"});
    for (const auto& row : *r.error_distributions) {
      std::vector<std::string> cells = {row.population, row.stage.empty() ? "--" : row.stage, ctx_label(row.context),
                                        std::to_string(row.dist.total)};
      for (auto type : functional::kErrorTypes)
        cells.push_back(fmt_percent(row.dist.proportions[static_cast<int>(type)]));
      cells.push_back(std::to_string(row.dist.unknown));
      t.row(std::move(cells));
    }
    t.write(out);
  }
  if (r.progress && !r.progress->empty()) {
    out << "## Progress\n\n";
    std::vector<std::string> metrics;
    for (const auto& row : *r.progress)
      if (std::find(metrics.begin(), metrics.end(), row.curve.metric) == metrics.end())
        metrics.push_back(row.curve.metric);
    for (const auto& metric : metrics) {
      out << "### " << metric << "\n\n";
      std::vector<std::string> header = {"Population", "Context"};
      for (const auto& row : *r.progress)
        if (row.curve.metric == metric) {
          for (const auto& b : row.curve.bins) header.push_back(bin_label(b));
          break;
        }
      MdTable t(header);
      for (const auto& row : *r.progress) {
        if (row.curve.metric != metric) continue;
        std::vector<std::string> cells = {row.population, ctx_label(row.context)};
        for (const auto& b : row.curve.bins) cells.push_back(b.mean ? fmt_fixed(*b.mean, 3) : "--");
        t.row(std::move(cells));
      }
      t.write(out);
    }
  }
  if (r.embed2d) {
    out << "## 2-D projection\n\n";
    MdTable t({"Stage", "Points", "PC1 variance", "PC2 variance"});
    for (const auto& b : *r.embed2d)
      t.row({b.stage.empty() ? "pooled" : b.stage, std::to_string(b.points.size()), fmt_percent(b.explained[0]),
             fmt_percent(b.explained[1])});
    t.write(out);
  }

  out << "## Settings\n\n";
  for (const auto& [k, v] : m.settings) out << "- " << k << ": " << v << "\n";
  out << "\n## Interpretations\n\n";
  for (const auto& [k, v] : m.interpretations) out << "- " << k << ": " << v << "\n";
  if (!m.exclusions.empty()) {
    out << "\n## Exclusions\n\n";
    MdTable t({"Population", "Metric", "Reason", "Count"});
    for (const auto& e : m.exclusions) t.row({e.population, e.metric, e.reason, std::to_string(e.count)});
    t.write(out);
  }
  if (!m.notices.empty()) {
    out << (m.exclusions.empty() ? "\n" : "") << "## Notices\n\n";
    for (const auto& n : m.notices) out << "- " << n << "\n";
  }
  return out.str();
}

std::vector<std::string> write_csv_bundle(const Report& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out << ",";
      util::write_csv_field(out, header[i]);
    }
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ",";
        util::write_csv_field(out, row[i]);
      }
      out << "\n";
    }
    write_file(dir / name, out.str());
    written.push_back(name);
  };
  auto opt_num = [](const std::optional<MaeCell>& m) { return m ? fmt_num(m->value) : std::string(); };
  auto sum_cells = [](const stats::Summary& s) -> std::vector<std::string> {
    if (s.n == 0) return {"0", "", ""};
    return {std::to_string(s.n), fmt_num(s.mean), fmt_num(s.std)};
  };

  std::vector<std::vector<std::string>> rows;
  if (r.table1)
    for (const auto& t : *r.table1)
      rows.push_back({t.model, t.stage, t.context ? "T" : "F", fmt_num(t.knn_distance), fmt_num(t.knn_coverage),
                      std::to_string(t.n_students), std::to_string(t.n_generated)});
  emit("table1.csv", {"model", "stage", "context", "knn_distance", "knn_coverage", "n_students", "n_generated"}, rows);

  rows.clear();
  if (r.table2)
    for (const auto& t : *r.table2) {
      std::vector<std::string> row = {t.model, t.stage, ctx_csv(t.context)};
      for (auto& c : sum_cells(t.violations)) row.push_back(c);
      row.push_back(opt_num(t.violations_mae));
      for (auto& c : sum_cells(t.style)) row.push_back(c);
      row.push_back(opt_num(t.style_mae));
      rows.push_back(std::move(row));
    }
  emit("table2.csv",
       {"model", "stage", "context", "violations_n", "violations_mean", "violations_std", "violations_mae", "style_n",
        "style_mean", "style_std", "style_mae"},
       rows);

  rows.clear();
  if (r.table3)
    for (const auto& t : *r.table3) {
      std::vector<std::string> row = {t.model, ctx_csv(t.context)};
      for (auto& c : sum_cells(t.pass_rate)) row.push_back(c);
      row.push_back(opt_num(t.pass_rate_mae));
      for (auto& c : sum_cells(t.violations)) row.push_back(c);
      row.push_back(opt_num(t.violations_mae));
      for (auto& c : sum_cells(t.style)) row.push_back(c);
      row.push_back(opt_num(t.style_mae));
      row.push_back(opt_num(t.cosine_distance));
      rows.push_back(std::move(row));
    }
  emit("table3.csv",
       {"model", "context", "pass_rate_n", "pass_rate_mean", "pass_rate_std", "pass_rate_mae", "violations_n",
        "violations_mean", "violations_std", "violations_mae", "style_n", "style_mean", "style_std", "style_mae",
        "cosine_distance"},
       rows);

  rows.clear();
  if (r.error_distributions)
    for (const auto& e : *r.error_distributions) {
      std::vector<std::string> row = {e.population, e.stage, ctx_csv(e.context), std::to_string(e.dist.total),
                                      std::to_string(e.dist.unknown)};
      for (auto t : functional::kErrorTypes) row.push_back(std::to_string(e.dist.counts[static_cast<int>(t)]));
      for (auto t : functional::kErrorTypes) row.push_back(fmt_num(e.dist.proportions[static_cast<int>(t)]));
      rows.push_back(std::move(row));
    }
  emit("err_dist.csv",
       {"population", "stage", "context", "total", "unknown", "n_no_error", "n_logical", "n_runtime", "n_compile",
        "p_no_error", "p_logical", "p_runtime", "p_compile"},
       rows);

  rows.clear();
  json variance = json::array();
  if (r.embed2d)
    for (const auto& b : *r.embed2d) {
      variance.push_back({{"stage", b.stage}, {"explained", {b.explained[0], b.explained[1]}}});
      for (const auto& p : b.points)
        rows.push_back({b.stage, p.key, p.population, fmt_fixed(p.x, 6), fmt_fixed(p.y, 6)});
    }
  emit("embed2d.csv", {"stage", "key", "population", "x", "y"}, rows);
  write_file(dir / "embed2d_variance.json", variance.dump(2) + "\n");
  written.push_back("embed2d_variance.json");

  if (r.progress) {
    std::set<std::string> metrics;
    for (const auto& p : *r.progress) metrics.insert(p.curve.metric);
    for (const auto& metric : metrics) {
      rows.clear();
      for (const auto& p : *r.progress) {
        if (p.curve.metric != metric) continue;
        for (std::size_t b = 0; b < p.curve.bins.size(); ++b) {
          const auto& bin = p.curve.bins[b];
          rows.push_back({p.population, ctx_csv(p.context), std::to_string(b), fmt_num(bin.lo), fmt_num(bin.hi),
                          std::to_string(bin.count), bin.mean ? fmt_num(*bin.mean) : ""});
        }
      }
      emit("progress_" + metric + ".csv", {"population", "context", "bin", "lo", "hi", "count", "mean"}, rows);
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

Format parse_format(const std::string& text) {
  if (text == "json") return Format::Json;
  if (text == "csv") return Format::CsvBundle;
  if (text == "md" || text == "markdown") return Format::Markdown;
  throw Error("unknown format '" + text + "' (expected json, csv or md)");
}

std::vector<std::string> render(const Report& report, Format format, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  switch (format) {
    case Format::Json:
      write_file(dir / "report.json", to_json(report));
      return {"report.json"};
    case Format::Markdown:
      write_file(dir / "report.md", to_markdown(report));
      return {"report.md"};
    case Format::CsvBundle:
      break;
  }
  return write_csv_bundle(report, dir);
}

}  // namespace trajeval::report
