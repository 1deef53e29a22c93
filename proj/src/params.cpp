#include "dcast/params.hpp"

#include <cmath>
#include <cstring>

#include "dcast/errors.hpp"

namespace dcast::nn {

std::uint64_t NetworkParams::value_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : slots_) feed(s.value.data(), s.value.size() * sizeof(double));
  return h;
}

void NetworkParams::copy_values_from(const NetworkParams& other) {
  if (slots_.size() != other.slots_.size())
    throw ConfigError("copy_values_from: slot count mismatch");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!slots_[i].value.same_shape(other.slots_[i].value))
      throw ConfigError("copy_values_from: shape mismatch at slot " + slots_[i].name);
    std::memcpy(slots_[i].value.data(), other.slots_[i].value.data(),
                slots_[i].value.size() * sizeof(double));
  }
}

void adam_step(NetworkParams& p, double lr, double beta1, double beta2, double eps) {
  p.adam_steps += 1;
  const double t = static_cast<double>(p.adam_steps);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t si = 0; si < p.count(); ++si) {
    auto& s = p.slot(static_cast<int>(si));
    for (std::size_t i = 0; i < s.value.size(); ++i) {
      const double g = s.grad[i];
      s.m[i] = beta1 * s.m[i] + (1.0 - beta1) * g;
      s.v[i] = beta2 * s.v[i] + (1.0 - beta2) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      s.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace dcast::nn
