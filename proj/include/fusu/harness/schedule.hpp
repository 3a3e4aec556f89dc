#pragma once

#include "fusu/harness/run_config.hpp"

namespace fusu::harness {

/// Learning rate used for the update at 0-based step `step` of `max_steps`:
///   poly:     lr0 * (1 - step / max_steps)^power
///   linear:   lr0 * (1 - step / max_steps)
///   constant: lr0
double learning_rate(const ScheduleSettings& schedule, double base_lr, long long step, long long max_steps);

}  // namespace fusu::harness
