#include "fusu/harness/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fusu::harness {

double learning_rate(const ScheduleSettings& schedule, double base_lr, long long step, long long max_steps) {
    if (max_steps <= 0 || step < 0) {
        throw std::invalid_argument("learning_rate: need 0 <= step and a positive step budget");
    }
    const double remaining = std::max(0.0, 1.0 - static_cast<double>(step) / static_cast<double>(max_steps));
    if (schedule.kind == "poly") {
        return base_lr * std::pow(remaining, schedule.power);
    }
    if (schedule.kind == "linear") {
        return base_lr * remaining;
    }
    if (schedule.kind == "constant") {
        return base_lr;
    }
    throw std::invalid_argument("learning_rate: unknown schedule '" + schedule.kind + "'");
}

}  // namespace fusu::harness
