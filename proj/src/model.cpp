#include "uisrnn/model.hpp"

#include <cmath>
#include <cstring>
#include <map>

#include <json.hpp>

#include "uisrnn/io.hpp"

namespace uisrnn {

void ModelConfig::validate() const {
  if (embedding_dim < 1)
    throw Error(ErrCode::config, "embedding_dim must be >= 1");
  if (hidden_units < 1)
    throw Error(ErrCode::config, "hidden_units must be >= 1");
  if (head_units < 1)
    throw Error(ErrCode::config, "head_units must be >= 1");
  if (!(sigma2_init > 0.0))
    throw Error(ErrCode::config, "sigma2_init must be positive");
}

SpeakerModel SpeakerModel::zeros(const ModelConfig& config) {
  config.validate();
  SpeakerModel m;
  m.config = config;
  int H = config.hidden_units;
  int D = config.embedding_dim;
  m.W_u = MatrixXd::Zero(H, D);
  m.U_u = MatrixXd::Zero(H, H);
  m.b_u = VectorXd::Zero(H);
  m.W_r = MatrixXd::Zero(H, D);
  m.U_r = MatrixXd::Zero(H, H);
  m.b_r = VectorXd::Zero(H);
  m.W_c = MatrixXd::Zero(H, D);
  m.U_c = MatrixXd::Zero(H, H);
  m.b_c = VectorXd::Zero(H);
  m.head_W = MatrixXd::Zero(D, H);
  m.head_b = VectorXd::Zero(D);
  m.sigma2 = VectorXd::Constant(config.per_dim_sigma2 ? D : 1,
                                config.sigma2_init);
  return m;
}

SpeakerModel SpeakerModel::init(const ModelConfig& config, std::uint64_t seed) {
  SpeakerModel m = zeros(config);
  Rng rng(derive_seed(seed, "model-init"));
  auto fill = [&](MatrixXd& w) {
    double r = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (long j = 0; j < w.cols(); ++j)
      for (long i = 0; i < w.rows(); ++i)
        w(i, j) = (2.0 * rng.uniform() - 1.0) * r;
  };
  fill(m.W_u);
  fill(m.U_u);
  fill(m.W_r);
  fill(m.U_r);
  fill(m.W_c);
  fill(m.U_c);
  fill(m.head_W);
  return m;
}

void SpeakerModel::validate() const {
  config.validate();
  int H = config.hidden_units;
  int D = config.embedding_dim;
  auto check = [&](const MatrixXd& w, long rows, long cols, const char* name) {
    if (w.rows() != rows || w.cols() != cols)
      throw Error(ErrCode::shape_mismatch, std::string(name) + ": got " +
                                               std::to_string(w.rows()) + "x" +
                                               std::to_string(w.cols()));
    if (!w.allFinite())
      throw Error(ErrCode::validation, std::string(name) + " has non-finite values");
  };
  check(W_u, H, D, "gru.W_u");
  check(U_u, H, H, "gru.U_u");
  check(W_r, H, D, "gru.W_r");
  check(U_r, H, H, "gru.U_r");
  check(W_c, H, D, "gru.W_c");
  check(U_c, H, H, "gru.U_c");
  check(b_u, H, 1, "gru.b_u");
  check(b_r, H, 1, "gru.b_r");
  check(b_c, H, 1, "gru.b_c");
  check(head_W, D, H, "head.W");
  check(head_b, D, 1, "head.b");
  long sig_len = config.per_dim_sigma2 ? D : 1;
  check(sigma2, sig_len, 1, "sigma2");
  if (!(sigma2.minCoeff() > 0.0))
    throw Error(ErrCode::validation, "sigma2 must be positive");
}

VectorXd SpeakerModel::sigma2_per_dim() const {
  if (sigma2.size() == config.embedding_dim) return sigma2;
  return VectorXd::Constant(config.embedding_dim, sigma2(0));
}

namespace {
inline VectorXd logistic(const VectorXd& v) {
  return (1.0 + (-v.array()).exp()).inverse().matrix();
}
}  // namespace

VectorXd gru_step(const SpeakerModel& model, const VectorXd& hidden,
                  const VectorXd& x) {
  if (!x.allFinite() || !hidden.allFinite())
    throw Error(ErrCode::validation, "gru_step input is not finite");
  if (x.size() != model.dim() || hidden.size() != model.hidden())
    throw Error(ErrCode::dim_mismatch, "gru_step input shapes");
  VectorXd u = logistic(model.W_u * x + model.U_u * hidden + model.b_u);
  VectorXd r = logistic(model.W_r * x + model.U_r * hidden + model.b_r);
  VectorXd c =
      (model.W_c * x + model.U_c * (r.cwiseProduct(hidden)) + model.b_c)
          .array()
          .tanh()
          .matrix();
  return (1.0 - u.array()).matrix().cwiseProduct(hidden) + u.cwiseProduct(c);
}

SpeakerInstanceState new_instance(const SpeakerModel& model) {
  SpeakerInstanceState state;
  state.hidden = gru_step(model, VectorXd::Zero(model.hidden()),
                          VectorXd::Zero(model.dim()));
  state.mean_sum = model.head(state.hidden);
  state.steps = 1;
  state.observed = 0;
  return state;
}

SpeakerInstanceState observe(const SpeakerModel& model,
                             const SpeakerInstanceState& state,
                             const VectorXd& x) {
  SpeakerInstanceState next;
  next.hidden = gru_step(model, state.hidden, x);
  next.mean_sum = state.mean_sum + model.head(next.hidden);
  next.steps = state.steps + 1;
  next.observed = state.observed + 1;
  return next;
}

double log_likelihood(const VectorXd& x, const VectorXd& mu,
                      const VectorXd& sigma2) {
  const double D = static_cast<double>(x.size());
  VectorXd diff = x - mu;
  if (sigma2.size() == 1) {
    double s2 = sigma2(0);
    return -0.5 * D * std::log(2.0 * M_PI * s2) -
           diff.squaredNorm() / (2.0 * s2);
  }
  double acc = 0.0;
  for (long d = 0; d < diff.size(); ++d)
    acc += -0.5 * std::log(2.0 * M_PI * sigma2(d)) -
           diff(d) * diff(d) / (2.0 * sigma2(d));
  return acc;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

// Blobs are written row-major regardless of Eigen's internal layout.
struct TensorRef {
  const char* name;
  MatrixXd* tensor;       // vectors are column matrices
  std::vector<long> shape;
};

std::vector<TensorRef> tensor_table(SpeakerModel& m, MatrixXd& alpha,
                                    MatrixXd& p0, MatrixXd& sigma2,
                                    MatrixXd& b_u, MatrixXd& b_r, MatrixXd& b_c,
                                    MatrixXd& head_b) {
  auto mat = [](const char* name, MatrixXd& w) {
    return TensorRef{name, &w, {w.rows(), w.cols()}};
  };
  auto vec = [](const char* name, MatrixXd& v) {
    return TensorRef{name, &v, {v.rows()}};
  };
  return {
      mat("gru.W_u", m.W_u), mat("gru.U_u", m.U_u), vec("gru.b_u", b_u),
      mat("gru.W_r", m.W_r), mat("gru.U_r", m.U_r), vec("gru.b_r", b_r),
      mat("gru.W_c", m.W_c), mat("gru.U_c", m.U_c), vec("gru.b_c", b_c),
      mat("head.W", m.head_W), vec("head.b", head_b),
      vec("sigma2", sigma2), vec("prior.alpha", alpha), vec("prior.p0", p0),
  };
}

void append_row_major(std::string& out, const MatrixXd& w) {
  for (long i = 0; i < w.rows(); ++i)
    for (long j = 0; j < w.cols(); ++j) {
      double v = w(i, j);
      char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      out.append(bytes, sizeof(double));
    }
}

void read_row_major(const char* src, MatrixXd& w) {
  for (long i = 0; i < w.rows(); ++i)
    for (long j = 0; j < w.cols(); ++j) {
      std::memcpy(&w(i, j), src, sizeof(double));
      src += sizeof(double);
    }
}

}  // namespace

void save_checkpoint(const SpeakerModel& model, const PriorParams& priors,
                     const std::string& path) {
  model.validate();
  priors.validate();
  SpeakerModel copy = model;
  MatrixXd alpha = MatrixXd::Constant(1, 1, priors.alpha);
  MatrixXd p0 = MatrixXd::Constant(1, 1, priors.p0);
  MatrixXd sigma2 = copy.sigma2, b_u = copy.b_u, b_r = copy.b_r,
           b_c = copy.b_c, head_b = copy.head_b;
  auto tensors = tensor_table(copy, alpha, p0, sigma2, b_u, b_r, b_c, head_b);

  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = {{"embedding_dim", model.config.embedding_dim},
                      {"hidden_units", model.config.hidden_units},
                      {"head_units", model.config.head_units},
                      {"sigma2_init", model.config.sigma2_init},
                      {"per_dim_sigma2", model.config.per_dim_sigma2}};
  nlohmann::ordered_json table;
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    long numel = 1;
    for (long s : t.shape) numel *= s;
    table[t.name] = {{"offset", offset}, {"shape", t.shape}};
    offset += static_cast<std::uint64_t>(numel) * sizeof(double);
  }
  header["tensors"] = std::move(table);

  std::string header_json = header.dump();
  std::string out;
  std::uint64_t header_len = header_json.size();
  char len_bytes[8];
  std::memcpy(len_bytes, &header_len, 8);
  out.append(len_bytes, 8);
  out += header_json;
  for (const auto& t : tensors) append_row_major(out, *t.tensor);
  write_text_file(path, out);
}

std::pair<SpeakerModel, PriorParams> load_checkpoint(const std::string& path) {
  std::string data = read_text_file(path);
  if (data.size() < 8)
    throw Error(ErrCode::corrupt, "'" + path + "': too short for a header");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, data.data(), 8);
  if (header_len == 0 || 8 + header_len > data.size())
    throw Error(ErrCode::corrupt, "'" + path + "': header length out of range");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(data.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrCode::corrupt, "'" + path + "': header: " + e.what());
  }
  if (header.value("format_version", 0u) != kCheckpointVersion)
    throw Error(ErrCode::version_mismatch,
                "'" + path + "': checkpoint format version");

  ModelConfig config;
  try {
    const auto& c = header.at("config");
    config.embedding_dim = c.at("embedding_dim").get<int>();
    config.hidden_units = c.at("hidden_units").get<int>();
    config.head_units = c.at("head_units").get<int>();
    config.sigma2_init = c.at("sigma2_init").get<double>();
    config.per_dim_sigma2 = c.value("per_dim_sigma2", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrCode::corrupt, "'" + path + "': config: " + e.what());
  }

  SpeakerModel model = SpeakerModel::zeros(config);
  PriorParams priors;
  MatrixXd alpha(1, 1), p0(1, 1);
  MatrixXd sigma2(model.sigma2.size(), 1), b_u(model.b_u.size(), 1),
      b_r(model.b_r.size(), 1), b_c(model.b_c.size(), 1),
      head_b(model.head_b.size(), 1);
  auto slots = tensor_table(model, alpha, p0, sigma2, b_u, b_r, b_c, head_b);

  const char* blob = data.data() + 8 + header_len;
  std::size_t blob_size = data.size() - 8 - header_len;
  const auto& table = header.at("tensors");
  for (auto& slot : slots) {
    if (!table.contains(slot.name))
      throw Error(ErrCode::corrupt,
                  "'" + path + "': missing tensor " + std::string(slot.name));
    const auto& entry = table.at(slot.name);
    auto shape = entry.at("shape").get<std::vector<long>>();
    if (shape != slot.shape)
      throw Error(ErrCode::shape_mismatch,
                  "'" + path + "': tensor " + std::string(slot.name) + " shape");
    auto offset = entry.at("offset").get<std::uint64_t>();
    long numel = 1;
    for (long s : shape) numel *= s;
    std::size_t bytes = static_cast<std::size_t>(numel) * sizeof(double);
    if (offset + bytes > blob_size)
      throw Error(ErrCode::truncated, "'" + path + "': tensor " +
                                          std::string(slot.name) +
                                          " extends past end of file");
    read_row_major(blob + offset, *slot.tensor);
  }

  model.sigma2 = sigma2.col(0);
  model.b_u = b_u.col(0);
  model.b_r = b_r.col(0);
  model.b_c = b_c.col(0);
  model.head_b = head_b.col(0);
  priors.alpha = alpha(0, 0);
  priors.p0 = p0(0, 0);
  model.validate();
  priors.validate();
  return {std::move(model), priors};
}

}  // namespace uisrnn
