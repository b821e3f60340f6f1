#ifndef ADAPTQP_PARAMS_HPP
#define ADAPTQP_PARAMS_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"
#include "adaptqp/rng.hpp"

namespace adaptqp {

/// Named dense parameter tensors with matching gradient slots and Adam state.
/// Iteration order is the (deterministic) lexicographic name order.
template <class S>
class ParamStore {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  struct Entry {
    Mat value;
    Mat grad;
    Mat adam_m;
    Mat adam_v;
  };

  Mat& create(const std::string& name, int rows, int cols) {
    if (entries_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
    Entry e;
    e.value = Mat::Zero(rows, cols);
    e.grad = Mat::Zero(rows, cols);
    e.adam_m = Mat::Zero(rows, cols);
    e.adam_v = Mat::Zero(rows, cols);
    return entries_.emplace(name, std::move(e)).first->second.value;
  }

  /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization
  Mat& create_uniform(const std::string& name, int rows, int cols, int fan_in, Rng& rng) {
    Mat& v = create(name, rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) v(i, j) = static_cast<S>(rng.uniform(-bound, bound));
    return v;
  }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }

  Mat& value(const std::string& name) { return at(name).value; }
  const Mat& value(const std::string& name) const { return at(name).value; }
  Mat& grad(const std::string& name) { return at(name).grad; }
  const Mat& grad(const std::string& name) const { return at(name).grad; }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.grad.setZero();
  }

  /// Bias-corrected Adam update from the accumulated gradients.
  void adam_step(S lr, S beta1 = S(0.9), S beta2 = S(0.999), S eps = S(1e-8)) {
    ++step_;
    const S bc1 = S(1) - std::pow(beta1, S(step_));
    const S bc2 = S(1) - std::pow(beta2, S(step_));
    for (auto& [name, e] : entries_) {
      e.adam_m = beta1 * e.adam_m + (S(1) - beta1) * e.grad;
      e.adam_v = beta2 * e.adam_v + (S(1) - beta2) * e.grad.cwiseProduct(e.grad);
      e.value -= lr * (e.adam_m / bc1).cwiseQuotient(((e.adam_v / bc2).cwiseSqrt().array() + eps).matrix());
    }
  }

  std::int64_t adam_steps() const { return step_; }
  void set_adam_steps(std::int64_t steps) { step_ = steps; }

  void copy_values_from(const ParamStore& other) {
    for (auto& [name, e] : entries_) e.value = other.at(name).value;
  }

  /// theta' <- tau * theta + (1 - tau) * theta'
  void polyak_from(const ParamStore& other, S tau) {
    for (auto& [name, e] : entries_) {
      e.value = tau * other.at(name).value + (S(1) - tau) * e.value;
    }
  }

  std::size_t size() const { return entries_.size(); }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }

  /// Flattens all values into one vector (test and finite-difference helper).
  Eigen::VectorXd flatten_values() const {
    std::size_t total = 0;
    for (const auto& [name, e] : entries_) total += e.value.size();
    Eigen::VectorXd out(total);
    std::size_t at = 0;
    for (const auto& [name, e] : entries_) {
      for (int j = 0; j < e.value.cols(); ++j)
        for (int i = 0; i < e.value.rows(); ++i) out[at++] = static_cast<double>(e.value(i, j));
    }
    return out;
  }

  Eigen::VectorXd flatten_grads() const {
    std::size_t total = 0;
    for (const auto& [name, e] : entries_) total += e.grad.size();
    Eigen::VectorXd out(total);
    std::size_t at = 0;
    for (const auto& [name, e] : entries_) {
      for (int j = 0; j < e.grad.cols(); ++j)
        for (int i = 0; i < e.grad.rows(); ++i) out[at++] = static_cast<double>(e.grad(i, j));
    }
    return out;
  }

  void unflatten_values(const Eigen::VectorXd& flat) {
    std::size_t at = 0;
    for (auto& [name, e] : entries_) {
      for (int j = 0; j < e.value.cols(); ++j)
        for (int i = 0; i < e.value.rows(); ++i) e.value(i, j) = static_cast<S>(flat[at++]);
    }
  }

 private:
  const Entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidArgument("unknown parameter: " + name);
    return it->second;
  }
  Entry& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidArgument("unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoint container: (name, shape, values) triples plus Adam state,
// binary and bit-exact on round trip.

namespace ckpt_detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

template <class S>
void write_mat(std::ostream& out, const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(S) * m.size()));
}

template <class S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> read_mat(std::istream& in) {
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(S) * m.size()));
  return m;
}

}  // namespace ckpt_detail

inline constexpr char kCheckpointMagic[9] = "AQPCKPT1";

/// Saves parameters + Adam state under a kind tag (e.g. "actor", "critic").
template <class S>
void save_checkpoint(const ParamStore<S>& store, const std::string& kind,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, 8);
  ckpt_detail::write_u32(out, sizeof(S));
  ckpt_detail::write_string(out, kind);
  ckpt_detail::write_i64(out, store.adam_steps());
  ckpt_detail::write_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, e] : store.entries()) {
    ckpt_detail::write_string(out, name);
    ckpt_detail::write_mat(out, e.value);
    ckpt_detail::write_mat(out, e.adam_m);
    ckpt_detail::write_mat(out, e.adam_v);
  }
}

/// Loads a checkpoint into an empty or matching store; returns the kind tag.
template <class S>
std::string load_checkpoint(ParamStore<S>& store, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw InvalidArgument("bad checkpoint magic in " + path);
  if (ckpt_detail::read_u32(in) != sizeof(S))
    throw InvalidArgument("checkpoint scalar width mismatch in " + path);
  const std::string kind = ckpt_detail::read_string(in);
  const std::int64_t steps = ckpt_detail::read_i64(in);
  const std::uint32_t count = ckpt_detail::read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = ckpt_detail::read_string(in);
    auto value = ckpt_detail::read_mat<S>(in);
    auto m = ckpt_detail::read_mat<S>(in);
    auto v = ckpt_detail::read_mat<S>(in);
    if (!store.has(name)) store.create(name, static_cast<int>(value.rows()), static_cast<int>(value.cols()));
    auto& entry = store.entries().at(name);
    if (entry.value.rows() != value.rows() || entry.value.cols() != value.cols())
      throw ShapeMismatch("checkpoint shape mismatch for " + name);
    entry.value = std::move(value);
    entry.adam_m = std::move(m);
    entry.adam_v = std::move(v);
  }
  store.set_adam_steps(steps);
  return kind;
}

}  // namespace adaptqp

#endif
