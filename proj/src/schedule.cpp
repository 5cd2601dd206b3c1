#include "kidc/schedule.hpp"

#include <iostream>

#include "kidc/errors.hpp"

namespace kidc::training {

const char* schedule_name(ScheduleKind k) {
    return k == ScheduleKind::constant ? "constant" : "linear_decay_with_warmup";
}

ScheduleKind schedule_from_name(const std::string& name) {
    if (name == "constant") return ScheduleKind::constant;
    if (name == "linear_decay_with_warmup" || name == "linear") {
        return ScheduleKind::linear_decay_with_warmup;
    }
    throw InvalidInput("unknown schedule '" + name + "'");
}

void Schedule::validate() const {
    if (kind == ScheduleKind::linear_decay_with_warmup) {
        if (total_steps == 0 || warmup_steps >= total_steps) {
            throw InvalidInput("schedule: need 0 <= warmup (" + std::to_string(warmup_steps) +
                               ") < total (" + std::to_string(total_steps) + ")");
        }
    }
}

double lr_at(std::size_t step, const Schedule& schedule, double base_lr) {
    schedule.validate();
    if (schedule.kind == ScheduleKind::constant) return base_lr;
    if (step > schedule.total_steps) {
        std::cerr << "[kidc] warning: lr requested at step " << step << " past total "
                  << schedule.total_steps << ", clamping to 0\n";
        return 0.0;
    }
    if (step < schedule.warmup_steps) {
        return base_lr * static_cast<double>(step) / static_cast<double>(schedule.warmup_steps);
    }
    return base_lr * static_cast<double>(schedule.total_steps - step) /
           static_cast<double>(schedule.total_steps - schedule.warmup_steps);
}

}  // namespace kidc::training
