#include "hiertag/heads.hpp"

#include <cmath>
#include <random>

#include "hiertag/errors.hpp"
#include "hiertag/kernels.hpp"
#include "hiertag/rng.hpp"

namespace hiertag {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Flat: return "flat";
    case Variant::LevelWise: return "level_wise";
    case Variant::TopDownSDT: return "top_down_sdt";
    case Variant::JointGMP: return "joint_gmp";
    case Variant::JointGAP: return "joint_gap";
    case Variant::JointLP: return "joint_lp";
    case Variant::ResAtt: return "resatt";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::Flat, Variant::LevelWise, Variant::TopDownSDT, Variant::JointGMP,
                    Variant::JointGAP, Variant::JointLP, Variant::ResAtt}) {
    if (name == variant_name(v)) return v;
  }
  throw VariantMismatch("unknown variant '" + name + "'");
}

int HeadModel::add_param(const std::string& name, int rows, int cols, int fan_in) {
  params_.push_back({name, Matrix(rows, cols), fan_in});
  return static_cast<int>(params_.size() - 1);
}

HeadModel::HeadModel(Variant variant, ModelDims dims, Hierarchy hierarchy, std::uint64_t seed)
    : variant_(variant), dims_(std::move(dims)), hierarchy_(std::move(hierarchy)) {
  if (dims_.input_dim < 1) throw ShapeMismatch("model needs a positive input dimension");
  if (dims_.encoder_hidden.empty()) throw ShapeMismatch("encoder needs at least one layer");
  for (int w : dims_.encoder_hidden) {
    if (w < 1) throw ShapeMismatch("encoder widths must be positive");
  }

  const int nf = hierarchy_.n_fine();
  const int nc = hierarchy_.n_coarse();
  const int nd = encoding_width();

  int prev = dims_.input_dim;
  for (std::size_t l = 0; l < dims_.encoder_hidden.size(); ++l) {
    const int width = dims_.encoder_hidden[l];
    const std::string base = "enc" + std::to_string(l);
    enc_w_.push_back(add_param(base + ".w", width, prev, prev));
    enc_b_.push_back(add_param(base + ".b", width, 1, prev));
    prev = width;
  }
  fine_w_ = add_param("fine.w", nf, nd, nd);
  fine_b_ = add_param("fine.b", nf, 1, nd);

  switch (variant_) {
    case Variant::Flat:
    case Variant::JointGMP:
    case Variant::JointGAP:
      break;
    case Variant::LevelWise:
    case Variant::TopDownSDT:
      extra_w_ = add_param("coarse.w", nc, nd, nd);
      extra_b_ = add_param("coarse.b", nc, 1, nd);
      break;
    case Variant::JointLP:
      extra_w_ = add_param("lp.w", nc, nf, nf);
      extra_b_ = add_param("lp.b", nc, 1, nf);
      break;
    case Variant::ResAtt:
      extra_w_ = add_param("att.w", nf * nc, nd, nd);
      extra_b_ = add_param("att.b", nf * nc, 1, nd);
      break;
  }

  std::mt19937_64 rng = make_rng(seed);
  for (Param& p : params_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t e = 0; e < p.value.size(); ++e) p.value.data()[e] = u(rng);
  }
  if (variant_ == Variant::ResAtt) {
    // Zero logits start the attention map at the uniform aggregation, so it
    // specializes from the coarse loss signal instead of first having to
    // undo a random input-dependent gating. Attention parameters are drawn
    // last, so zeroing them leaves every other layer's draw unchanged.
    params_[static_cast<std::size_t>(extra_w_)].value.fill(0.0);
    params_[static_cast<std::size_t>(extra_b_)].value.fill(0.0);
  }
}

void HeadModel::for_each_param(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  for (const Param& p : params_) fn(p.name, p.value);
}

HeadModel::BoundParams HeadModel::bind(Tape& tape) const {
  BoundParams bp;
  bp.ids.reserve(params_.size());
  for (const Param& p : params_) bp.ids.push_back(tape.input(p.value));
  return bp;
}

HeadModel::SampleGraph HeadModel::build_forward(Tape& t, const BoundParams& bp,
                                                Tape::Id x) const {
  if (t.value(x).rows() != dims_.input_dim || t.value(x).cols() != 1) {
    throw ShapeMismatch("sample features must be a (input_dim, 1) column");
  }
  const auto P = [&bp](int role) { return bp.ids[static_cast<std::size_t>(role)]; };

  Tape::Id z = x;
  for (std::size_t l = 0; l < enc_w_.size(); ++l) {
    z = t.tanh(t.affine(P(enc_w_[l]), z, P(enc_b_[l])));
  }

  SampleGraph g;
  switch (variant_) {
    case Variant::Flat:
      g.p_fine = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      break;
    case Variant::LevelWise:
      g.p_fine = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      g.p_coarse = t.sigmoid(t.affine(P(extra_w_), z, P(extra_b_)));
      break;
    case Variant::TopDownSDT: {
      g.p_coarse = t.sigmoid(t.affine(P(extra_w_), z, P(extra_b_)));
      const Tape::Id leaf = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      g.p_fine = t.mul(t.gather_parent(g.p_coarse, hierarchy_), leaf);
      break;
    }
    case Variant::JointGMP:
      g.p_fine = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      g.p_coarse = t.grouped_max(g.p_fine, hierarchy_);
      break;
    case Variant::JointGAP:
      g.p_fine = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      g.p_coarse = t.grouped_avg(g.p_fine, hierarchy_);
      break;
    case Variant::JointLP:
      g.p_fine = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      g.p_coarse = t.sigmoid(t.affine(P(extra_w_), g.p_fine, P(extra_b_)));
      break;
    case Variant::ResAtt: {
      g.p_fine = t.sigmoid(t.affine(P(fine_w_), z, P(fine_b_)));
      const Tape::Id raw = t.affine(P(extra_w_), z, P(extra_b_));
      // Row-major reshape: raw entry (i*n_coarse + c) lands at (i, c).
      const Tape::Id shaped = t.reshape(raw, hierarchy_.n_fine(), hierarchy_.n_coarse());
      g.attention = t.softmax_cols(shaped);
      g.p_coarse = t.matvec_t(g.attention, g.p_fine);
      break;
    }
  }
  return g;
}

Prediction HeadModel::predict(const Matrix& x) const {
  Tape tape;
  const BoundParams bp = bind(tape);
  const Tape::Id xid = tape.input(x);
  const SampleGraph g = build_forward(tape, bp, xid);
  Prediction p;
  p.p_fine = tape.value(g.p_fine);
  if (g.p_coarse >= 0) p.p_coarse = tape.value(g.p_coarse);
  if (g.attention >= 0) p.attention = tape.value(g.attention);
  return p;
}

namespace {
Prediction checked_predict(const Matrix& x, const HeadModel& m, Variant expect) {
  if (m.variant() != expect) {
    throw VariantMismatch(std::string("expected a ") + variant_name(expect) +
                          " model, got " + variant_name(m.variant()));
  }
  return m.predict(x);
}
}  // namespace

Prediction forward_flat(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::Flat);
}
Prediction forward_level_wise(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::LevelWise);
}
Prediction forward_top_down(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::TopDownSDT);
}
Prediction forward_joint_gmp(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::JointGMP);
}
Prediction forward_joint_gap(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::JointGAP);
}
Prediction forward_joint_lp(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::JointLP);
}
Prediction forward_resatt(const Matrix& x, const HeadModel& m) {
  return checked_predict(x, m, Variant::ResAtt);
}

Prediction aggregate_inference_bottom_up(const Prediction& p, const Hierarchy& h) {
  if (p.p_fine.rows() != h.n_fine() || p.p_fine.cols() != 1) {
    throw LengthMismatch("bottom-up aggregation expects (n_fine, 1) fine probabilities");
  }
  Prediction out = p;
  out.p_coarse = Matrix(h.n_coarse(), 1);
  std::vector<int> argmax(static_cast<std::size_t>(h.n_coarse()));
  std::vector<double> margin(static_cast<std::size_t>(h.n_coarse()));
  kernels::serial::grouped_max(p.p_fine, h, out.p_coarse, argmax, margin);
  return out;
}

}  // namespace hiertag
