#include "t2sim/nvic/nvic.hpp"

namespace t2sim::nvic {

namespace {
constexpr unsigned kMaxLines = 256;
}

Nvic::Nvic(std::vector<InterruptLine> lines, NvicCosts costs) : costs_(costs) {
    unsigned max_id = 0;
    for (const auto& l : lines) {
        if (l.id >= kMaxLines) throw ConfigError("interrupt line id " + std::to_string(l.id) + " exceeds 255");
        max_id = std::max(max_id, l.id + 1);
    }
    lines_.resize(max_id);
    defined_.assign(max_id, false);
    for (const auto& l : lines) {
        if (defined_[l.id]) throw ConfigError("interrupt line " + std::to_string(l.id) + " defined twice");
        lines_[l.id] = l;
        defined_[l.id] = true;
    }
}

const InterruptLine& Nvic::line(unsigned id) const {
    if (!has_line(id)) throw ConfigError("unknown interrupt line " + std::to_string(id));
    return lines_[id];
}

void Nvic::pend(unsigned id) {
    if (!has_line(id)) throw ConfigError("unknown interrupt line " + std::to_string(id));
    lines_[id].pending = true;
}

void Nvic::clear_pending(unsigned id) {
    if (!has_line(id)) throw ConfigError("unknown interrupt line " + std::to_string(id));
    lines_[id].pending = false;
}

void Nvic::set_enabled(unsigned id, bool enabled) {
    if (!has_line(id)) throw ConfigError("unknown interrupt line " + std::to_string(id));
    lines_[id].enabled = enabled;
}

std::optional<unsigned> Nvic::arbitrate(int current_priority) const {
    std::optional<unsigned> best;
    int best_priority = current_priority;
    for (unsigned id = 0; id < lines_.size(); ++id) {
        if (!defined_[id]) continue;
        const auto& l = lines_[id];
        if (!l.pending || l.active) continue;
        if (!l.nmi && (!l.enabled || primask_)) continue;
        const int p = l.effective_priority();
        if (p < best_priority) {
            best = id;
            best_priority = p;
        }
    }
    return best;
}

void Nvic::activate_line(unsigned id) {
    auto& l = lines_.at(id);
    l.pending = false;
    l.active = true;
    active_.push_back({ExceptionSource::Line, id, l.effective_priority()});
}

void Nvic::activate_abort(ExceptionSource source) {
    active_.push_back({source, 0, kFaultPriority});
}

std::optional<ActiveException> Nvic::complete() {
    if (active_.empty()) return std::nullopt;
    auto top = active_.back();
    active_.pop_back();
    if (top.source == ExceptionSource::Line) lines_[top.line].active = false;
    return top;
}

} // namespace t2sim::nvic
