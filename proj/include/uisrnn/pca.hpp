#pragma once

#include <string>
#include <vector>

#include "uisrnn/types.hpp"

namespace uisrnn {

// Mean-centered projection onto the top principal directions of the sample
// covariance, in descending eigenvalue order. Rows of `basis` are orthonormal.
struct PcaProjection {
  int input_dim = 0;
  int output_dim = 0;
  VectorXd mean;          // length input_dim
  MatrixXd basis;         // output_dim x input_dim
  VectorXd eigenvalues;   // length output_dim, descending

  void validate() const;
};

PcaProjection pca_fit(const std::vector<EmbeddingSequence>& sequences,
                      int output_dim);
EmbeddingSequence pca_apply(const PcaProjection& proj,
                            const EmbeddingSequence& seq);

void save_pca(const PcaProjection& proj, const std::string& path);
PcaProjection load_pca(const std::string& path);

}  // namespace uisrnn
