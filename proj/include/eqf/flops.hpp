#pragma once

#include <cstdint>

// Optional floating-point operation ledger. Counting is off unless a Recorder is alive on
// the current thread, so timed benchmark runs pay only a null-pointer check.
namespace eqf::flops {

enum class Phase { Propagate, Correct, Other };

struct Counts {
  std::uint64_t propagate = 0;
  std::uint64_t correct = 0;
  std::uint64_t other = 0;
};

class Recorder {
 public:
  explicit Recorder(Counts& sink);
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

 private:
  Counts* previous_;
};

class PhaseScope {
 public:
  explicit PhaseScope(Phase phase);
  ~PhaseScope();
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  Phase previous_;
};

bool enabled();
void add(std::uint64_t n);

/// Multiply-add count of an (r x k) * (k x c) product.
inline std::uint64_t gemm(std::uint64_t r, std::uint64_t k, std::uint64_t c) { return 2 * r * k * c; }

}  // namespace eqf::flops
