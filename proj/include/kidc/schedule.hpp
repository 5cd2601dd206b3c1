#pragma once

#include <cstddef>
#include <string>

namespace kidc::training {

enum class ScheduleKind { linear_decay_with_warmup, constant };

const char* schedule_name(ScheduleKind k);
ScheduleKind schedule_from_name(const std::string& name);

struct Schedule {
    ScheduleKind kind = ScheduleKind::constant;
    std::size_t warmup_steps = 0;
    std::size_t total_steps = 0;

    void validate() const;
};

// Linear kind: base*step/warmup while warming up, then base*(total-step)/
// (total-warmup); continuous at step == warmup, zero at step == total. Steps
// past total clamp to zero with a logged warning. Constant kind: base always.
double lr_at(std::size_t step, const Schedule& schedule, double base_lr);

}  // namespace kidc::training
