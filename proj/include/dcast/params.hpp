#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dcast/tensor.hpp"

namespace dcast::nn {

/// Flat collection of named parameter tensors with matching gradient slots
/// and per-parameter Adam moment accumulators. One instance backs one
/// network (a committee member or a Q-network).
class NetworkParams {
 public:
  struct Slot {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m;  // Adam first moment
    Tensor v;  // Adam second moment
  };

  int add(std::string name, Tensor init) {
    Slot s;
    s.name = std::move(name);
    s.grad = Tensor::zeros(init.shape());
    s.m = Tensor::zeros(init.shape());
    s.v = Tensor::zeros(init.shape());
    s.value = std::move(init);
    slots_.push_back(std::move(s));
    return static_cast<int>(slots_.size()) - 1;
  }

  Slot& slot(int i) { return slots_[static_cast<std::size_t>(i)]; }
  const Slot& slot(int i) const { return slots_[static_cast<std::size_t>(i)]; }
  std::size_t count() const { return slots_.size(); }

  int find(std::string_view name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i)
      if (slots_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void zero_grad() {
    for (auto& s : slots_) s.grad.fill(0.0);
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& s : slots_) n += s.value.size();
    return n;
  }

  /// FNV-1a over the raw parameter bytes. Used by tests to pin down
  /// "unchanged between syncs" without copying whole networks.
  std::uint64_t value_hash() const;

  /// Copies parameter values (not grads, not optimizer state) from another
  /// instance with an identical layout.
  void copy_values_from(const NetworkParams& other);

  long adam_steps = 0;

 private:
  std::vector<Slot> slots_;
};

/// One Adam update with bias correction over every slot. Gradients are left
/// untouched; the caller zeroes them between steps.
void adam_step(NetworkParams& p, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace dcast::nn
