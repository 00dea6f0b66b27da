#include "trajeval/stats/stats.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "trajeval/util/text.hpp"

namespace trajeval::stats {

using nlohmann::ordered_json;

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string StyleScoreModel::to_json() const {
  ordered_json j;
  j["feature_order"] = feature_order;
  j["means"] = to_vector(means);
  j["scales"] = to_vector(scales);
  j["loading"] = to_vector(loading);
  j["sign_anchor"] = sign_anchor;
  j["eigenvalue"] = eigenvalue;
  j["fitted_on"] = fitted_on;
  return j.dump();
}

StyleScoreModel StyleScoreModel::from_json(const std::string& text) {
  StyleScoreModel m;
  try {
    auto j = ordered_json::parse(text);
    m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    m.means = from_vector(j.at("means").get<std::vector<double>>());
    m.scales = from_vector(j.at("scales").get<std::vector<double>>());
    m.loading = from_vector(j.at("loading").get<std::vector<double>>());
    m.sign_anchor = j.at("sign_anchor").get<std::string>();
    m.eigenvalue = j.value("eigenvalue", 0.0);
    m.fitted_on = j.value("fitted_on", std::size_t{0});
  } catch (const ordered_json::exception& e) {
    throw Error(std::string("bad style model: ") + e.what());
  }
  if (m.feature_order != kStyleFeatures) throw Error("style model: unexpected feature order");
  auto n = static_cast<Eigen::Index>(kStyleFeatures.size());
  if (m.means.size() != n || m.scales.size() != n || m.loading.size() != n)
    throw Error("style model: vectors must have one entry per feature");
  if ((m.scales.array() <= 0.0).any()) throw Error("style model: scales must be positive");
  if (std::abs(m.loading.norm() - 1.0) > 1e-9) throw Error("style model: loading is not a unit vector");
  return m;
}

std::string StyleScoreModel::digest() const { return util::sha256_hex(to_json()); }

Eigen::VectorXd style_features(const analysis::CodeMetrics& m) {
  if (!m.parse_ok) throw Error("style features need parseable code");
  Eigen::VectorXd f(5);
  f << static_cast<double>(m.char_count), static_cast<double>(m.line_count), m.ast_depth, m.ast_width, m.ast_nodes;
  return f;
}

StyleScoreModel fit_style_model(const std::vector<analysis::CodeMetrics>& reference, std::vector<std::string>* warnings) {
  std::vector<const analysis::CodeMetrics*> rows;
  for (const auto& m : reference)
    if (m.parse_ok) rows.push_back(&m);
  if (rows.size() < 2) throw Error("style model needs at least 2 parseable reference submissions");

  const auto d = static_cast<Eigen::Index>(kStyleFeatures.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = style_features(*rows[i]);

  StyleScoreModel model;
  model.fitted_on = rows.size();
  const double n = static_cast<double>(rows.size());
  model.means = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - model.means.transpose();
  model.scales = (z.colwise().squaredNorm() / n).cwiseSqrt();
  int constant = 0;
  for (Eigen::Index c = 0; c < d; ++c) {
    if (model.scales(c) > 0.0) continue;
    model.scales(c) = 1.0;
    ++constant;
    if (warnings != nullptr) warnings->push_back("style model: feature " + kStyleFeatures[c] + " is constant");
  }
  if (constant == d) throw Error("style model: every feature is constant");
  z = z.array().rowwise() / model.scales.transpose().array();

  Eigen::MatrixXd cov = (z.transpose() * z) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw Error("style model: eigen-decomposition failed");
  model.eigenvalue = es.eigenvalues()(d - 1);
  model.loading = es.eigenvectors().col(d - 1).normalized();

  Eigen::Index anchor = 0;
  if (std::abs(model.loading(anchor)) < 1e-12) {
    if (warnings != nullptr) warnings->push_back("style model: char_count has no loading; orienting on first nonzero");
    while (anchor + 1 < d && std::abs(model.loading(anchor)) < 1e-12) ++anchor;
  }
  if (model.loading(anchor) < 0) model.loading = -model.loading;
  return model;
}

std::optional<double> style_score(const StyleScoreModel& model, const analysis::CodeMetrics& m) {
  if (!m.parse_ok) return std::nullopt;
  Eigen::VectorXd z = (style_features(m) - model.means).cwiseQuotient(model.scales);
  return model.loading.dot(z);
}

namespace {

std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    std::size_t j = 1;
    for (; j < static_cast<std::size_t>(len) && i + j < s.size(); ++j) {
      auto cc = static_cast<unsigned char>(s[i + j]);
      if ((cc & 0xC0) != 0x80) break;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (j < static_cast<std::size_t>(len)) {  // invalid sequence: take the byte as-is
      cp = c;
      j = 1;
    }
    out.push_back(cp);
    i += j;
  }
  return out;
}

}  // namespace

std::size_t levenshtein(std::string_view a_text, std::string_view b_text) {
  std::u32string a = decode(a_text);
  std::u32string b = decode(b_text);
  std::size_t lo = 0;
  while (lo < a.size() && lo < b.size() && a[lo] == b[lo]) ++lo;
  std::size_t ea = a.size(), eb = b.size();
  while (ea > lo && eb > lo && a[ea - 1] == b[eb - 1]) --ea, --eb;
  std::u32string_view x(a.data() + lo, ea - lo);
  std::u32string_view y(b.data() + lo, eb - lo);
  if (x.size() < y.size()) std::swap(x, y);
  if (y.empty()) return x.size();

  std::vector<std::size_t> row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

std::size_t ProgressCurve::total() const {
  std::size_t t = 0;
  for (const auto& b : bins) t += b.count;
  return t;
}

ProgressCurve progress_curve(const std::vector<std::vector<std::optional<double>>>& values, int bins,
                             std::string metric) {
  if (bins < 1) throw Error("progress curve needs at least one bin");
  if (values.empty()) throw Error("progress curve: no streams");
  ProgressCurve curve;
  curve.metric = std::move(metric);
  std::vector<double> sums(static_cast<std::size_t>(bins), 0.0);
  curve.bins.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    curve.bins[b].lo = static_cast<double>(b) / bins;
    curve.bins[b].hi = static_cast<double>(b + 1) / bins;
  }
  for (const auto& stream : values) {
    const std::size_t n = stream.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!stream[i]) continue;
      // floor(u * bins) in exact integer arithmetic; u = 1 joins the last bin.
      std::size_t b = n == 1 ? 0 : std::min<std::size_t>(i * static_cast<std::size_t>(bins) / (n - 1), bins - 1);
      sums[b] += *stream[i];
      ++curve.bins[b].count;
    }
  }
  for (std::size_t b = 0; b < curve.bins.size(); ++b)
    if (curve.bins[b].count > 0) curve.bins[b].mean = sums[b] / static_cast<double>(curve.bins[b].count);
  return curve;
}

ProgressCurve progress_curve(const std::vector<const corpus::Stream*>& streams,
                             const std::function<std::optional<double>(const corpus::Submission&)>& metric, int bins,
                             std::string name) {
  std::vector<std::vector<std::optional<double>>> values;
  values.reserve(streams.size());
  for (const corpus::Stream* s : streams) {
    auto& v = values.emplace_back();
    for (const auto& sub : s->submissions) v.push_back(metric(sub));
  }
  return progress_curve(values, bins, std::move(name));
}

ProgressCurve edit_distance_curve(const std::vector<const corpus::Stream*>& streams, int bins) {
  std::vector<std::vector<std::optional<double>>> values;
  values.reserve(streams.size());
  for (const corpus::Stream* s : streams) {
    auto& v = values.emplace_back(s->size());
    for (std::size_t i = 1; i < s->size(); ++i)
      v[i] = static_cast<double>(levenshtein(s->submissions[i - 1].code, s->submissions[i].code));
  }
  return progress_curve(values, bins, "edit_distance");
}

PairwiseMAE pairwise_mae(const std::vector<std::pair<std::optional<double>, std::optional<double>>>& pairs,
                         std::string metric) {
  PairwiseMAE out;
  out.metric = std::move(metric);
  double sum = 0.0;
  for (const auto& [model, student] : pairs) {
    if (!model || !student) {
      ++out.skipped;
      continue;
    }
    sum += std::abs(*model - *student);
    ++out.pairs;
  }
  if (out.pairs == 0) throw Error("pairwise MAE" + (out.metric.empty() ? "" : " (" + out.metric + ")") +
                                  ": no pair has both values");
  out.value = sum / static_cast<double>(out.pairs);
  return out;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.n));
  return s;
}

Summary summarize(const std::vector<std::optional<double>>& values) {
  std::vector<double> defined;
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  return summarize(defined);
}

}  // namespace trajeval::stats
