#ifndef ADAPTQP_REPLAY_HPP
#define ADAPTQP_REPLAY_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/env.hpp"
#include "adaptqp/errors.hpp"
#include "adaptqp/rng.hpp"

namespace adaptqp {

struct Transition {
  Observation obs;
  Eigen::VectorXd action;
  double reward = -1.0;
  Observation next_obs;
  bool done = false;
};

/// FIFO ring buffer with seeded uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw InvalidArgument("replay capacity must be positive");
  }

  void push(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  const Transition& sample_one() {
    if (storage_.empty()) throw InvalidArgument("cannot sample from an empty buffer");
    return storage_[rng_.below(storage_.size())];
  }

  std::vector<const Transition*> sample(int batch) {
    std::vector<const Transition*> out;
    out.reserve(batch);
    for (int i = 0; i < batch; ++i) out.push_back(&sample_one());
    return out;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<Transition>& storage() const { return storage_; }

  std::size_t next_slot() const { return next_; }
  Rng& rng() { return rng_; }
  void restore(std::vector<Transition> storage, std::size_t next) {
    storage_ = std::move(storage);
    next_ = next;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t next_ = 0;
  Rng rng_;
};

}  // namespace adaptqp

#endif
