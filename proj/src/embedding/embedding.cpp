#include "trajeval/embedding/embedding.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include <Eigen/SVD>

#include "trajeval/util/text.hpp"

namespace trajeval::embedding {

void validate(const EmbeddingSet& set) {
  if (static_cast<Eigen::Index>(set.keys.size()) != set.matrix.rows())
    throw Error("embedding set: " + std::to_string(set.keys.size()) + " keys for " +
                std::to_string(set.matrix.rows()) + " rows");
  for (Eigen::Index i = 0; i < set.matrix.rows(); ++i) {
    double n = set.matrix.row(i).norm();
    if (!std::isfinite(n) || !(n > 0.0)) throw Error("embedding set: row " + std::to_string(i) + " has zero norm");
    if (set.normalized && std::abs(n - 1.0) > 1e-6)
      throw Error("embedding set: row " + std::to_string(i) + " is not unit length");
  }
}

EmbeddingSet normalized(const EmbeddingSet& set) {
  EmbeddingSet out = set;
  for (Eigen::Index i = 0; i < out.matrix.rows(); ++i) {
    double n = out.matrix.row(i).norm();
    if (!(n > 0.0)) throw Error("embedding set: row " + std::to_string(i) + " has zero norm");
    out.matrix.row(i) /= n;
  }
  out.normalized = true;
  return out;
}

Distance parse_distance(const std::string& text) {
  if (text == "cosine") return Distance::Cosine;
  if (text == "euclidean") return Distance::Euclidean;
  throw Error("unknown distance '" + text + "'");
}

CoverageDirection parse_coverage_direction(const std::string& text) {
  if (text == "generated-to-students") return CoverageDirection::GeneratedToStudents;
  if (text == "students-to-generated") return CoverageDirection::StudentsToGenerated;
  throw Error("unknown coverage direction '" + text + "'");
}

std::string to_string(Distance d) { return d == Distance::Cosine ? "cosine" : "euclidean"; }

std::string to_string(CoverageDirection d) {
  return d == CoverageDirection::GeneratedToStudents ? "generated-to-students" : "students-to-generated";
}

namespace {

// Runs fn(i) for i in [0, n), split across threads when the work is large
// enough. Callers write results by index, so the outcome is order-free.
template <typename Fn>
void parallel_rows(Eigen::Index n, std::size_t cost_per_row, Fn fn) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t total = static_cast<std::size_t>(n) * cost_per_row;
  unsigned workers = total < 2'000'000 ? 1u : std::min<unsigned>(hw, 8u);
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (Eigen::Index i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

class DistanceRow {
 public:
  DistanceRow(const Matrix& candidates, Distance distance) : candidates_(candidates), distance_(distance) {
    if (distance_ == Distance::Cosine) {
      sq_.resize(candidates.rows());
      for (Eigen::Index j = 0; j < candidates.rows(); ++j) sq_[j] = candidates.row(j).dot(candidates.row(j));
    }
  }

  void fill(const Eigen::Ref<const Eigen::RowVectorXd>& q, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(candidates_.rows()));
    if (distance_ == Distance::Cosine) {
      double sq = q.dot(q);
      for (Eigen::Index j = 0; j < candidates_.rows(); ++j) {
        double c = q.dot(candidates_.row(j)) / std::sqrt(sq * sq_[j]);
        c = c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
        out[j] = 1.0 - c;
      }
    } else {
      for (Eigen::Index j = 0; j < candidates_.rows(); ++j) out[j] = (q - candidates_.row(j)).norm();
    }
  }

 private:
  const Matrix& candidates_;
  Distance distance_;
  Eigen::VectorXd sq_;
};

// The first k indices by (distance, index).
std::vector<Eigen::Index> smallest(const std::vector<double>& d, std::size_t k) {
  std::vector<Eigen::Index> idx(d.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
  idx.resize(k);
  return idx;
}

void check_pair(const EmbeddingSet& a, const EmbeddingSet& b, int k) {
  if (k < 1) throw Error("k must be at least 1");
  if (a.rows() > 0 && b.rows() > 0 && a.dim() != b.dim())
    throw Error("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

}  // namespace

std::vector<std::vector<Eigen::Index>> nearest_neighbors(const Matrix& queries, const Matrix& candidates, int k,
                                                         Distance distance) {
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(queries.rows()));
  DistanceRow rows(candidates, distance);
  parallel_rows(queries.rows(), static_cast<std::size_t>(candidates.rows() * std::max<Eigen::Index>(1, candidates.cols())),
                [&](Eigen::Index i) {
                  std::vector<double> d;
                  rows.fill(queries.row(i), d);
                  out[i] = smallest(d, static_cast<std::size_t>(k));
                });
  return out;
}

double knn_distance(const EmbeddingSet& students, const EmbeddingSet& generated, int k, Distance distance) {
  check_pair(students, generated, k);
  if (students.rows() == 0) throw Error("knn distance: no student rows");
  if (generated.rows() == 0) throw Error("knn distance: no generated rows");
  validate(students);
  validate(generated);
  std::vector<double> per_row(static_cast<std::size_t>(students.rows()));
  DistanceRow rows(generated.matrix, distance);
  parallel_rows(students.rows(), static_cast<std::size_t>(generated.rows() * generated.dim()), [&](Eigen::Index i) {
    std::vector<double> d;
    rows.fill(students.matrix.row(i), d);
    std::vector<Eigen::Index> near = smallest(d, static_cast<std::size_t>(k));
    double sum = 0.0;
    for (Eigen::Index j : near) sum += d[j];
    per_row[i] = sum / static_cast<double>(near.size());
  });
  double total = 0.0;
  for (double v : per_row) total += v;
  return total / static_cast<double>(per_row.size());
}

double knn_coverage(const EmbeddingSet& students, const EmbeddingSet& generated, int k, Distance distance,
                    CoverageDirection direction) {
  check_pair(students, generated, k);
  if (students.rows() == 0 || generated.rows() == 0) throw Error("knn coverage: both sets must be non-empty");
  validate(students);
  validate(generated);
  const Matrix& queries = direction == CoverageDirection::GeneratedToStudents ? generated.matrix : students.matrix;
  const Matrix& targets = direction == CoverageDirection::GeneratedToStudents ? students.matrix : generated.matrix;
  std::vector<char> covered(static_cast<std::size_t>(targets.rows()), 0);
  for (const auto& near : nearest_neighbors(queries, targets, k, distance))
    for (Eigen::Index j : near) covered[j] = 1;
  std::size_t hits = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
  return static_cast<double>(hits) / static_cast<double>(targets.rows());
}

Projection2D project_2d(const std::vector<const EmbeddingSet*>& sets) {
  Eigen::Index n = 0;
  Eigen::Index d = -1;
  for (const EmbeddingSet* s : sets) {
    if (s->rows() == 0) continue;
    if (d >= 0 && s->dim() != d) throw Error("projection: embedding dimension mismatch");
    d = s->dim();
    n += s->rows();
  }
  if (n < 3) throw Error("projection needs at least 3 rows, got " + std::to_string(n));

  Projection2D out;
  Matrix pooled(n, d);
  Eigen::Index r = 0;
  for (std::size_t si = 0; si < sets.size(); ++si) {
    if (sets[si]->rows() == 0) continue;
    pooled.middleRows(r, sets[si]->rows()) = sets[si]->matrix;
    r += sets[si]->rows();
    out.set_of_row.insert(out.set_of_row.end(), static_cast<std::size_t>(sets[si]->rows()), si);
  }
  Eigen::VectorXd raw = Eigen::BDCSVD<Eigen::MatrixXd>(pooled).singularValues();
  if (raw.size() < 2 || !(raw(0) > 0.0) || raw(1) <= raw(0) * 1e-12)
    throw Error("projection: pooled embeddings have rank < 2");

  Eigen::RowVectorXd mean = pooled.colwise().mean();
  Matrix centered = pooled.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  double total = s.squaredNorm();
  // Collinear points: the second axis carries no variance and its direction
  // is arbitrary, so its coordinates are reported as 0.
  bool flat = s(1) <= s(0) * 1e-12;

  Eigen::MatrixXd axes = svd.matrixV().leftCols(2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < axes.rows(); ++i)
      if (std::abs(axes(i, c)) > std::abs(axes(arg, c)) + 1e-12) arg = i;
    if (axes(arg, c) < 0) axes.col(c) *= -1.0;
    out.explained[c] = s(c) * s(c) / total;
  }
  out.coords = centered * axes;
  if (flat) {
    out.coords.col(1).setZero();
    out.explained[1] = 0.0;
  }
  return out;
}

void write_projection_csv(const std::filesystem::path& path, const std::vector<const EmbeddingSet*>& sets,
                          const std::vector<std::string>& populations, const Projection2D& projection) {
  if (populations.size() != sets.size()) throw Error("projection csv: one population name per set required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "key,population,x,y\n";
  Eigen::Index r = 0;
  char buf[64];
  for (std::size_t si = 0; si < sets.size(); ++si) {
    for (const auto& key : sets[si]->keys) {
      util::write_csv_field(out, key);
      out << ',';
      util::write_csv_field(out, populations[si]);
      for (Eigen::Index c = 0; c < 2; ++c) {
        std::snprintf(buf, sizeof buf, ",%.6f", projection.coords(r, c));
        out << buf;
      }
      out << '\n';
      ++r;
    }
  }
}

}  // namespace trajeval::embedding
