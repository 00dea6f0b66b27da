#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajeval/error.hpp"

namespace trajeval::embedding {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbeddingSet {
  std::vector<std::string> keys;  // one per row
  Matrix matrix;
  std::string provider_id;
  bool normalized = false;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index dim() const { return matrix.cols(); }
};

/// Throws unless keys match rows and every row has a positive finite norm
/// (and unit norm when the set claims to be normalized).
void validate(const EmbeddingSet& set);

/// Returns a copy with every row scaled to unit L2 norm.
EmbeddingSet normalized(const EmbeddingSet& set);

template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw Error("cosine similarity: dimension mismatch");
  double sa = a.dot(a);
  double sb = b.dot(b);
  if (!(sa > 0.0) || !(sb > 0.0)) throw Error("cosine similarity: zero vector");
  // sqrt(x * x) == x exactly, so v . v gives 1 with no rounding residue.
  double c = a.dot(b) / std::sqrt(sa * sb);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

enum class Distance { Cosine, Euclidean };

enum class CoverageDirection {
  GeneratedToStudents,  // students found in the generated rows' neighborhoods
  StudentsToGenerated,  // generated rows found in the students' neighborhoods
};

Distance parse_distance(const std::string& text);
CoverageDirection parse_coverage_direction(const std::string& text);
std::string to_string(Distance d);
std::string to_string(CoverageDirection d);

/// Mean over student rows of the average distance to their min(k, |generated|)
/// nearest generated rows. Neighbor ties go to the lower row index.
double knn_distance(const EmbeddingSet& students, const EmbeddingSet& generated, int k = 3,
                    Distance distance = Distance::Cosine);

/// Fraction of student rows in the union of the generated rows'
/// min(k, |students|)-nearest neighborhoods (or the converse direction).
double knn_coverage(const EmbeddingSet& students, const EmbeddingSet& generated, int k = 10,
                    Distance distance = Distance::Cosine,
                    CoverageDirection direction = CoverageDirection::GeneratedToStudents);

/// Indices of the min(k, |candidates|) nearest candidate rows of every query
/// row, nearest first.
std::vector<std::vector<Eigen::Index>> nearest_neighbors(const Matrix& queries, const Matrix& candidates, int k,
                                                         Distance distance = Distance::Cosine);

struct Projection2D {
  Matrix coords;               // one row per pooled input row
  std::vector<std::size_t> set_of_row;  // index into the input list
  double explained[2] = {0.0, 0.0};     // variance fractions of the two axes
};

/// PCA of the pooled, mean-centered rows. Each axis is oriented so its
/// largest-magnitude loading is positive (lowest index on ties). Throws when
/// fewer than 3 rows are pooled or the raw rows span fewer than 2 dimensions;
/// collinear (after centering) rows get a zero second axis.
Projection2D project_2d(const std::vector<const EmbeddingSet*>& sets);

/// CSV (key, population, x, y); `populations` names the input sets.
void write_projection_csv(const std::filesystem::path& path, const std::vector<const EmbeddingSet*>& sets,
                          const std::vector<std::string>& populations, const Projection2D& projection);

}  // namespace trajeval::embedding
