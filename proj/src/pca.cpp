#include "uisrnn/pca.hpp"

#include <Eigen/SVD>
#include <json.hpp>

#include "uisrnn/io.hpp"

namespace uisrnn {

void PcaProjection::validate() const {
  if (input_dim < 1 || output_dim < 1 || output_dim > input_dim)
    throw Error(ErrCode::validation, "invalid pca dimensions");
  if (mean.size() != input_dim || basis.rows() != output_dim ||
      basis.cols() != input_dim)
    throw Error(ErrCode::shape_mismatch, "pca tensor shapes inconsistent");
  MatrixXd gram = basis * basis.transpose();
  if (!(gram - MatrixXd::Identity(output_dim, output_dim)).isZero(1e-8))
    throw Error(ErrCode::validation, "pca basis rows are not orthonormal");
}

PcaProjection pca_fit(const std::vector<EmbeddingSequence>& sequences,
                      int output_dim) {
  long total_frames = 0;
  int input_dim = 0;
  for (const auto& seq : sequences) {
    seq.validate();
    if (input_dim == 0) input_dim = seq.dim();
    if (seq.dim() != input_dim)
      throw Error(ErrCode::dim_mismatch, "pca inputs have mixed dimensions");
    total_frames += seq.length();
  }
  if (input_dim == 0)
    throw Error(ErrCode::validation, "pca_fit needs at least one sequence");
  if (output_dim < 1 || output_dim > input_dim)
    throw Error(ErrCode::validation,
                "pca output dim " + std::to_string(output_dim) +
                    " out of range for input dim " + std::to_string(input_dim));
  if (total_frames < output_dim)
    throw Error(ErrCode::validation, "pca_fit needs at least output_dim frames");

  MatrixXd stacked(total_frames, input_dim);
  long row = 0;
  for (const auto& seq : sequences) {
    stacked.middleRows(row, seq.length()) = seq.frames;
    row += seq.length();
  }

  PcaProjection proj;
  proj.input_dim = input_dim;
  proj.output_dim = output_dim;
  proj.mean = stacked.colwise().mean().transpose();
  stacked.rowwise() -= proj.mean.transpose();

  // SVD of the centered data; right singular vectors are the principal
  // directions and singular values map to covariance eigenvalues.
  Eigen::BDCSVD<MatrixXd> svd(stacked, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double denom = std::max<long>(1, total_frames - 1);

  proj.basis.resize(output_dim, input_dim);
  proj.eigenvalues.resize(output_dim);
  int available = static_cast<int>(sv.size());
  for (int k = 0; k < output_dim && k < available; ++k) {
    proj.basis.row(k) = svd.matrixV().col(k).transpose();
    proj.eigenvalues(k) = sv(k) * sv(k) / denom;
  }
  if (available > 0 && output_dim <= available) {
    double max_sv = sv(0);
    if (max_sv > 0.0 && sv(output_dim - 1) <= 1e-12 * max_sv)
      log_warn("pca: data is rank deficient; trailing directions are an "
               "arbitrary orthonormal completion");
  }

  // Deterministic sign: largest-magnitude component of each row positive.
  for (int k = 0; k < output_dim; ++k) {
    int idx = 0;
    proj.basis.row(k).cwiseAbs().maxCoeff(&idx);
    if (proj.basis(k, idx) < 0.0) proj.basis.row(k) *= -1.0;
  }
  proj.validate();
  return proj;
}

EmbeddingSequence pca_apply(const PcaProjection& proj,
                            const EmbeddingSequence& seq) {
  proj.validate();
  seq.validate();
  if (seq.dim() != proj.input_dim)
    throw Error(ErrCode::dim_mismatch,
                "sequence dim " + std::to_string(seq.dim()) +
                    " != pca input dim " + std::to_string(proj.input_dim));
  EmbeddingSequence out;
  out.frame_duration = seq.frame_duration;
  out.frames = (seq.frames.rowwise() - proj.mean.transpose()) *
               proj.basis.transpose();
  return out;
}

void save_pca(const PcaProjection& proj, const std::string& path) {
  proj.validate();
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  doc["input_dim"] = proj.input_dim;
  doc["output_dim"] = proj.output_dim;
  doc["mean"] = std::vector<double>(proj.mean.data(),
                                    proj.mean.data() + proj.mean.size());
  auto rows = nlohmann::ordered_json::array();
  for (int k = 0; k < proj.output_dim; ++k) {
    rows.push_back(std::vector<double>(proj.basis.row(k).begin(),
                                       proj.basis.row(k).end()));
  }
  doc["basis"] = std::move(rows);
  doc["eigenvalues"] = std::vector<double>(
      proj.eigenvalues.data(), proj.eigenvalues.data() + proj.eigenvalues.size());
  write_text_file(path, doc.dump(2) + "\n");
}

PcaProjection load_pca(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrCode::parse, "'" + path + "': " + e.what());
  }
  if (doc.value("format_version", 0) != 1)
    throw Error(ErrCode::version_mismatch, "'" + path + "': unknown pca version");
  PcaProjection proj;
  try {
    proj.input_dim = doc.at("input_dim").get<int>();
    proj.output_dim = doc.at("output_dim").get<int>();
    auto mean = doc.at("mean").get<std::vector<double>>();
    proj.mean = Eigen::Map<VectorXd>(mean.data(), mean.size());
    proj.basis.resize(proj.output_dim, proj.input_dim);
    const auto& rows = doc.at("basis");
    if (static_cast<int>(rows.size()) != proj.output_dim)
      throw Error(ErrCode::shape_mismatch, "'" + path + "': basis row count");
    for (int k = 0; k < proj.output_dim; ++k) {
      auto r = rows.at(k).get<std::vector<double>>();
      if (static_cast<int>(r.size()) != proj.input_dim)
        throw Error(ErrCode::shape_mismatch, "'" + path + "': basis row width");
      proj.basis.row(k) = Eigen::Map<VectorXd>(r.data(), r.size()).transpose();
    }
    auto ev = doc.at("eigenvalues").get<std::vector<double>>();
    proj.eigenvalues = Eigen::Map<VectorXd>(ev.data(), ev.size());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrCode::parse, "'" + path + "': " + e.what());
  }
  proj.validate();
  return proj;
}

}  // namespace uisrnn
