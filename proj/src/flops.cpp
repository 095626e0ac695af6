#include "eqf/flops.hpp"

namespace eqf::flops {

namespace {
thread_local Counts* g_sink = nullptr;
thread_local Phase g_phase = Phase::Other;
}  // namespace

Recorder::Recorder(Counts& sink) : previous_(g_sink) { g_sink = &sink; }
Recorder::~Recorder() { g_sink = previous_; }

PhaseScope::PhaseScope(Phase phase) : previous_(g_phase) { g_phase = phase; }
PhaseScope::~PhaseScope() { g_phase = previous_; }

bool enabled() { return g_sink != nullptr; }

void add(std::uint64_t n) {
  if (!g_sink) return;
  switch (g_phase) {
    case Phase::Propagate: g_sink->propagate += n; break;
    case Phase::Correct: g_sink->correct += n; break;
    case Phase::Other: g_sink->other += n; break;
  }
}

}  // namespace eqf::flops
