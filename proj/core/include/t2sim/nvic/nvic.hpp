#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "t2sim/common.hpp"

namespace t2sim::nvic {

// Execution priorities. Lower numbers win. Thread mode runs at kBasePriority;
// synchronous aborts run at kFaultPriority and the NMI line above them.
inline constexpr int kNmiPriority = -2;
inline constexpr int kFaultPriority = -1;
inline constexpr int kBasePriority = 256;

// Value loaded into LR on exception entry. Writing any 0xFFFFFFFx value to
// the PC while a handler is active performs the exception return.
inline constexpr Word kExcReturn = 0xFFFFFFF9u;
inline bool is_exc_return(Word value) { return value >= 0xFFFFFFF0u; }

inline constexpr unsigned kFrameWords = 8;
inline constexpr unsigned kFrameBytes = kFrameWords * 4;

struct InterruptLine {
    unsigned id = 0;
    bool enabled = false;
    bool pending = false;
    bool active = false;
    std::uint8_t priority = 0;
    bool nmi = false;

    int effective_priority() const { return nmi ? kNmiPriority : priority; }
};

struct NvicCosts {
    Cycles stacking = 8;
    Cycles unstack = 8;
    Cycles tailchain = 4;
    Cycles refill = 2;
};

// Identity of a running handler: an interrupt line or a synchronous abort.
enum class ExceptionSource : std::uint8_t { Line, DataAbort, PrefetchAbort };

struct ActiveException {
    ExceptionSource source = ExceptionSource::Line;
    unsigned line = 0;
    int priority = kBasePriority;
};

class Nvic {
public:
    Nvic() = default;
    // Throws ConfigError when two lines share an id or more than 256 lines are given.
    explicit Nvic(std::vector<InterruptLine> lines, NvicCosts costs = {});

    const std::vector<InterruptLine>& lines() const { return lines_; }
    const InterruptLine& line(unsigned id) const;
    bool has_line(unsigned id) const { return id < lines_.size() && defined_[id]; }
    const NvicCosts& costs() const { return costs_; }

    // Unknown lines throw ConfigError.
    void pend(unsigned id);
    void clear_pending(unsigned id);
    void set_enabled(unsigned id, bool enabled);

    bool primask() const { return primask_; }
    void set_primask(bool masked) { primask_ = masked; }

    // Highest-priority takeable pending line that strictly outranks
    // `current_priority`; ties go to the lowest id. PRIMASK blocks all but NMI.
    std::optional<unsigned> arbitrate(int current_priority) const;

    // Priority of the running context: top of the active stack or thread level.
    int current_priority() const { return active_.empty() ? kBasePriority : active_.back().priority; }
    bool in_handler() const { return !active_.empty(); }
    const std::vector<ActiveException>& active_stack() const { return active_; }

    // Marks `id` active (clearing pending) and pushes it.
    void activate_line(unsigned id);
    void activate_abort(ExceptionSource source);
    // Pops the running handler. Returns nullopt when nothing is active.
    std::optional<ActiveException> complete();

    Cycles entry_cycles(Cycles vector_fetch) const {
        return std::max(costs_.stacking, vector_fetch) + costs_.refill;
    }
    Cycles tailchain_cycles(Cycles vector_fetch) const {
        return std::max(costs_.tailchain, vector_fetch) + costs_.refill;
    }
    Cycles return_cycles() const { return costs_.unstack; }

private:
    std::vector<InterruptLine> lines_; // indexed by id; gaps are undefined lines
    std::vector<bool> defined_;
    std::vector<ActiveException> active_;
    NvicCosts costs_{};
    bool primask_ = false;
};

} // namespace t2sim::nvic
