#ifndef ADAPTQP_NN_HPP
#define ADAPTQP_NN_HPP

#include <cmath>
#include <string>
#include <vector>

#include "adaptqp/errors.hpp"
#include "adaptqp/params.hpp"
#include "adaptqp/rng.hpp"
#include "adaptqp/tape.hpp"

namespace adaptqp {

inline constexpr double kLeakySlope = 0.01;

/// Bounded output activation (tanh(x) + 1) * 3 - 3, i.e. 3 tanh(x),
/// range (-3, 3). Heads interpret the output as log10(rho).
inline double exptanh(double x) { return 3.0 * std::tanh(x); }

enum class OutputActivation { Identity, ExpTanh };

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  OutputActivation output_activation = OutputActivation::Identity;
};

template <class S>
void init_mlp(ParamStore<S>& store, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  std::vector<int> dims = spec.hidden;
  dims.push_back(spec.output_dim);
  int in = spec.input_dim;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    store.create_uniform(prefix + ".w" + std::to_string(i), dims[i], in, in, rng);
    store.create_uniform(prefix + ".b" + std::to_string(i), dims[i], 1, in, rng);
    in = dims[i];
  }
}

/// Affine-activation chain applied columnwise: input is (input_dim x batch).
template <class S>
typename Tape<S>::Var mlp_forward(Tape<S>& tape, ParamStore<S>& store, const std::string& prefix,
                                  const MlpSpec& spec, typename Tape<S>::Var input) {
  if (tape.value(input).rows() != spec.input_dim)
    throw ShapeMismatch(prefix + ": input dim " + std::to_string(tape.value(input).rows()) +
                        " != " + std::to_string(spec.input_dim));
  std::vector<int> dims = spec.hidden;
  dims.push_back(spec.output_dim);
  typename Tape<S>::Var h = input;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    auto w = tape.param(store, prefix + ".w" + std::to_string(i));
    auto b = tape.param(store, prefix + ".b" + std::to_string(i));
    h = tape.add_colwise(tape.matmul(w, h), b);
    if (i + 1 < dims.size()) {
      h = tape.leaky_relu(h, S(kLeakySlope));
    } else if (spec.output_activation == OutputActivation::ExpTanh) {
      h = tape.scale(tape.tanh_op(h), S(3));
    }
  }
  return h;
}

struct GruSpec {
  int input_dim = 8;
  int hidden_dim = 8;
};

template <class S>
void init_gru(ParamStore<S>& store, const std::string& prefix, const GruSpec& spec, Rng& rng) {
  const int fan_in = spec.input_dim + spec.hidden_dim;
  for (const char* gate : {"z", "r", "n"}) {
    store.create_uniform(prefix + ".w" + gate, spec.hidden_dim, fan_in, fan_in, rng);
    store.create_uniform(prefix + ".b" + gate, spec.hidden_dim, 1, fan_in, rng);
  }
}

/// Standard GRU cell applied columnwise to (input_dim x batch) inputs:
///   z = sigmoid(Wz [x, h] + bz)
///   r = sigmoid(Wr [x, h] + br)
///   n = tanh(Wn [x, r . h] + bn)
///   h' = (1 - z) . n + z . h
template <class S>
typename Tape<S>::Var gru_step(Tape<S>& tape, ParamStore<S>& store, const std::string& prefix,
                               const GruSpec& spec, typename Tape<S>::Var x,
                               typename Tape<S>::Var h) {
  if (tape.value(x).rows() != spec.input_dim || tape.value(h).rows() != spec.hidden_dim ||
      tape.value(x).cols() != tape.value(h).cols())
    throw ShapeMismatch(prefix + ": gru input shapes");
  auto gate = [&](const char* g, typename Tape<S>::Var in) {
    auto w = tape.param(store, prefix + ".w" + std::string(g));
    auto b = tape.param(store, prefix + ".b" + std::string(g));
    return tape.add_colwise(tape.matmul(w, in), b);
  };
  auto xh = tape.concat_rows({x, h});
  auto z = tape.sigmoid(gate("z", xh));
  auto r = tape.sigmoid(gate("r", xh));
  auto xrh = tape.concat_rows({x, tape.mul(r, h)});
  auto n = tape.tanh_op(gate("n", xrh));
  auto one_minus_z = tape.add_scalar(tape.scale(z, S(-1)), S(1));
  return tape.add(tape.mul(one_minus_z, n), tape.mul(z, h));
}

}  // namespace adaptqp

#endif
