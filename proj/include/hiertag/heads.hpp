#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hiertag/hierarchy.hpp"
#include "hiertag/matrix.hpp"
#include "hiertag/tape.hpp"

namespace hiertag {

// The seven classifier-head architectures. All share an MLP encoder; they
// differ in how (and whether) coarse probabilities are produced.
enum class Variant {
  Flat,        // fine head only; coarse obtained later by bottom-up max
  LevelWise,   // independent fine and coarse heads on the shared encoding
  TopDownSDT,  // fine = coarse parent prob * leaf conditional (both sigmoid)
  JointGMP,    // coarse = per-group max of fine probs, inside the graph
  JointGAP,    // coarse = per-group mean of fine probs
  JointLP,     // coarse = sigmoid of a learned projection of fine probs
  ResAtt,      // coarse = column-softmax attention applied to fine probs
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);  // throws VariantMismatch

struct ModelDims {
  int input_dim = 0;
  // Hidden widths of the tanh MLP encoder; the last entry is the encoding
  // width the heads consume.
  std::vector<int> encoder_hidden = {128};
};

// One sample's outputs. p_coarse is empty for Flat (until inference-time
// aggregation); attention is a column-stochastic (n_fine x n_coarse) map,
// present only for ResAtt.
struct Prediction {
  Matrix p_fine;
  Matrix p_coarse;
  Matrix attention;

  bool has_coarse() const { return !p_coarse.empty(); }
  bool has_attention() const { return !attention.empty(); }
};

class HeadModel {
 public:
  HeadModel() = default;
  // Initializes every parameter uniformly in +-1/sqrt(fan_in) from a
  // generator seeded with `seed`; biases use their layer's fan-in.
  HeadModel(Variant variant, ModelDims dims, Hierarchy hierarchy, std::uint64_t seed);

  Variant variant() const { return variant_; }
  const ModelDims& dims() const { return dims_; }
  const Hierarchy& hierarchy() const { return hierarchy_; }
  int encoding_width() const { return dims_.encoder_hidden.back(); }

  // Parameters in a fixed, documented order: encoder layers first
  // (enc0.w, enc0.b, enc1.w, ...), then fine head (fine.w, fine.b), then the
  // variant's extra head if any (coarse.w/b, lp.w/b, or att.w/b).
  int param_count() const { return static_cast<int>(params_.size()); }
  const std::string& param_name(int i) const { return params_[static_cast<std::size_t>(i)].name; }
  Matrix& param_value(int i) { return params_[static_cast<std::size_t>(i)].value; }
  const Matrix& param_value(int i) const { return params_[static_cast<std::size_t>(i)].value; }

  void for_each_param(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  // Tape handles of all parameters, in param order.
  struct BoundParams {
    std::vector<Tape::Id> ids;
  };
  // Copies current parameter values onto the tape as leaves.
  BoundParams bind(Tape& tape) const;

  struct SampleGraph {
    Tape::Id p_fine = -1;
    Tape::Id p_coarse = -1;   // -1 when the variant has no coarse output
    Tape::Id attention = -1;  // -1 unless ResAtt
  };
  // Builds the forward graph for one sample; x must be a bound (d, 1) leaf.
  // Multiple samples may share one tape and one BoundParams.
  SampleGraph build_forward(Tape& tape, const BoundParams& bp, Tape::Id x) const;

  // One-sample inference on a throwaway graph; x is (d, 1).
  Prediction predict(const Matrix& x) const;

 private:
  struct Param {
    std::string name;
    Matrix value;
    int fan_in = 1;
  };

  int add_param(const std::string& name, int rows, int cols, int fan_in);

  Variant variant_ = Variant::Flat;
  ModelDims dims_;
  Hierarchy hierarchy_;
  std::vector<Param> params_;

  // Role indices into params_ (-1 where the variant lacks the role).
  std::vector<int> enc_w_, enc_b_;
  int fine_w_ = -1, fine_b_ = -1;
  int extra_w_ = -1, extra_b_ = -1;  // coarse / lp / att head
};

// Variant-checked entry points; each throws VariantMismatch when handed a
// model of a different architecture.
Prediction forward_flat(const Matrix& x, const HeadModel& m);
Prediction forward_level_wise(const Matrix& x, const HeadModel& m);
Prediction forward_top_down(const Matrix& x, const HeadModel& m);
Prediction forward_joint_gmp(const Matrix& x, const HeadModel& m);
Prediction forward_joint_gap(const Matrix& x, const HeadModel& m);
Prediction forward_joint_lp(const Matrix& x, const HeadModel& m);
Prediction forward_resatt(const Matrix& x, const HeadModel& m);

// Inference-time bottom-up rule for the flat baseline: coarse = per-group
// max of fine probabilities. No parameters involved.
Prediction aggregate_inference_bottom_up(const Prediction& p, const Hierarchy& h);

}  // namespace hiertag
