#include "uisrnn/grad.hpp"

namespace uisrnn {

ModelGradients ModelGradients::zeros(const ModelConfig& config) {
  ModelGradients g;
  int H = config.hidden_units;
  int D = config.embedding_dim;
  g.W_u = MatrixXd::Zero(H, D);
  g.U_u = MatrixXd::Zero(H, H);
  g.b_u = VectorXd::Zero(H);
  g.W_r = MatrixXd::Zero(H, D);
  g.U_r = MatrixXd::Zero(H, H);
  g.b_r = VectorXd::Zero(H);
  g.W_c = MatrixXd::Zero(H, D);
  g.U_c = MatrixXd::Zero(H, H);
  g.b_c = VectorXd::Zero(H);
  g.head_W = MatrixXd::Zero(D, H);
  g.head_b = VectorXd::Zero(D);
  g.d_log_sigma2 = VectorXd::Zero(config.per_dim_sigma2 ? D : 1);
  return g;
}

ModelGradients& ModelGradients::operator+=(const ModelGradients& other) {
  W_u += other.W_u;
  U_u += other.U_u;
  b_u += other.b_u;
  W_r += other.W_r;
  U_r += other.U_r;
  b_r += other.b_r;
  W_c += other.W_c;
  U_c += other.U_c;
  b_c += other.b_c;
  head_W += other.head_W;
  head_b += other.head_b;
  d_log_sigma2 += other.d_log_sigma2;
  return *this;
}

ModelGradients& ModelGradients::scale_network(double factor) {
  W_u *= factor;
  U_u *= factor;
  b_u *= factor;
  W_r *= factor;
  U_r *= factor;
  b_r *= factor;
  W_c *= factor;
  U_c *= factor;
  b_c *= factor;
  head_W *= factor;
  head_b *= factor;
  return *this;
}

bool ModelGradients::all_finite() const {
  return W_u.allFinite() && U_u.allFinite() && b_u.allFinite() &&
         W_r.allFinite() && U_r.allFinite() && b_r.allFinite() &&
         W_c.allFinite() && U_c.allFinite() && b_c.allFinite() &&
         head_W.allFinite() && head_b.allFinite() &&
         d_log_sigma2.allFinite();
}

SequenceForward sequence_forward(const SpeakerModel& model,
                                 const MatrixXd& frames) {
  const int L = static_cast<int>(frames.rows());
  if (L < 1) throw Error(ErrCode::validation, "empty training sequence");
  if (frames.cols() != model.dim())
    throw Error(ErrCode::dim_mismatch, "sequence dim != model dim");

  SequenceForward fwd;
  fwd.inputs.reserve(L);
  fwd.h_prev.reserve(L);
  fwd.update.reserve(L);
  fwd.reset.reserve(L);
  fwd.cand.reserve(L);
  fwd.hidden.reserve(L);
  fwd.outputs.reserve(L);
  fwd.means.reserve(L);

  VectorXd h = VectorXd::Zero(model.hidden());
  VectorXd mean_sum = VectorXd::Zero(model.dim());
  for (int k = 0; k < L; ++k) {
    VectorXd x = k == 0 ? VectorXd::Zero(model.dim())
                        : VectorXd(frames.row(k - 1).transpose());
    VectorXd au = model.W_u * x + model.U_u * h + model.b_u;
    VectorXd ar = model.W_r * x + model.U_r * h + model.b_r;
    VectorXd u = (1.0 + (-au.array()).exp()).inverse().matrix();
    VectorXd r = (1.0 + (-ar.array()).exp()).inverse().matrix();
    VectorXd c = (model.W_c * x + model.U_c * r.cwiseProduct(h) + model.b_c)
                     .array()
                     .tanh()
                     .matrix();
    VectorXd h_next = (1.0 - u.array()).matrix().cwiseProduct(h) +
                      u.cwiseProduct(c);
    VectorXd o = model.head(h_next);
    mean_sum += o;

    fwd.inputs.push_back(std::move(x));
    fwd.h_prev.push_back(h);
    fwd.update.push_back(std::move(u));
    fwd.reset.push_back(std::move(r));
    fwd.cand.push_back(std::move(c));
    fwd.hidden.push_back(h_next);
    fwd.outputs.push_back(std::move(o));
    fwd.means.push_back(mean_sum / (k + 1));
    h = std::move(h_next);
  }
  return fwd;
}

VectorXd squared_error_per_dim(const SequenceForward& fwd,
                               const std::vector<VectorXd>& targets) {
  VectorXd acc = VectorXd::Zero(fwd.means.front().size());
  for (int j = 0; j < fwd.length(); ++j) {
    VectorXd diff = fwd.means[j] - targets[j];
    acc += diff.cwiseProduct(diff);
  }
  return acc;
}

void sequence_backward(const SpeakerModel& model, const SequenceForward& fwd,
                       const std::vector<VectorXd>& targets,
                       const VectorXd& residual_weight, ModelGradients& grads) {
  const int L = fwd.length();
  if (static_cast<int>(targets.size()) != L)
    throw Error(ErrCode::dim_mismatch, "target count != sequence length");

  // dLoss/do_k = sum_{j >= k} (1/j) * dLoss/dmu_j, built as a suffix sum.
  std::vector<VectorXd> d_out(L);
  VectorXd running = VectorXd::Zero(model.dim());
  for (int j = L - 1; j >= 0; --j) {
    VectorXd d_mu =
        residual_weight.cwiseProduct(fwd.means[j] - targets[j]);
    running += d_mu / (j + 1);
    d_out[j] = running;
  }

  VectorXd dh = VectorXd::Zero(model.hidden());
  for (int k = L - 1; k >= 0; --k) {
    // Head.
    grads.head_W += d_out[k] * fwd.hidden[k].transpose();
    grads.head_b += d_out[k];
    dh += model.head_W.transpose() * d_out[k];

    const VectorXd& u = fwd.update[k];
    const VectorXd& r = fwd.reset[k];
    const VectorXd& c = fwd.cand[k];
    const VectorXd& hp = fwd.h_prev[k];
    const VectorXd& x = fwd.inputs[k];

    VectorXd du = dh.cwiseProduct(c - hp);
    VectorXd dc = dh.cwiseProduct(u);
    VectorXd dhp = dh.cwiseProduct((1.0 - u.array()).matrix());

    VectorXd dac = dc.cwiseProduct((1.0 - c.array().square()).matrix());
    grads.W_c += dac * x.transpose();
    grads.U_c += dac * r.cwiseProduct(hp).transpose();
    grads.b_c += dac;
    VectorXd drh = model.U_c.transpose() * dac;
    VectorXd dr = drh.cwiseProduct(hp);
    dhp += drh.cwiseProduct(r);

    VectorXd dau = du.cwiseProduct(u).cwiseProduct(
        (1.0 - u.array()).matrix());
    grads.W_u += dau * x.transpose();
    grads.U_u += dau * hp.transpose();
    grads.b_u += dau;
    dhp += model.U_u.transpose() * dau;

    VectorXd dar = dr.cwiseProduct(r).cwiseProduct(
        (1.0 - r.array()).matrix());
    grads.W_r += dar * x.transpose();
    grads.U_r += dar * hp.transpose();
    grads.b_r += dar;
    dhp += model.U_r.transpose() * dar;

    dh = std::move(dhp);
  }
}

}  // namespace uisrnn
