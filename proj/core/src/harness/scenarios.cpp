#include "t2sim/harness/scenarios.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "t2sim/harness/programs.hpp"
#include "t2sim/harness/report.hpp"

namespace t2sim::harness {

using nlohmann::json;

namespace {

// Scenario parameters supplied on the command line or by tests.
class Overrides {
public:
    Overrides(std::string_view scenario, const json& doc) : scenario_(scenario), doc_(doc) {
        if (!doc_.is_object()) throw ConfigError("overrides: expected an object");
    }

    std::uint64_t number(const std::string& key, std::uint64_t fallback) {
        used_.insert(key);
        if (!doc_.contains(key)) return fallback;
        const auto& v = doc_.at(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        if (v.is_string()) {
            const auto& s = v.get_ref<const std::string&>();
            try {
                std::size_t used = 0;
                const auto n = std::stoull(s, &used, 0);
                if (used == s.size()) return n;
            } catch (const std::exception&) {
            }
        }
        throw ConfigError("overrides." + key + ": expected a non-negative integer");
    }

    std::string text(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        if (!doc_.contains(key)) return fallback;
        const auto& v = doc_.at(key);
        if (!v.is_string()) throw ConfigError("overrides." + key + ": expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, _] : doc_.items()) {
            if (!used_.count(key)) {
                throw ConfigError("overrides." + key + ": not a parameter of scenario '" + scenario_ + "'");
            }
        }
    }

private:
    std::string scenario_;
    const json& doc_;
    std::set<std::string> used_;
};

AddressRef label(const std::string& name, const std::string& path = "<scenario>") { return {name, path}; }

ProgramSpec program(std::string source, std::optional<assembler::LoadMode> mode = std::nullopt) {
    ProgramSpec p;
    p.source = std::move(source);
    p.origin_name = "<scenario>";
    p.mode = mode;
    return p;
}

LineSpec line(unsigned id, std::uint8_t priority, const std::string& handler) {
    LineSpec l;
    l.line.id = id;
    l.line.priority = priority;
    l.line.enabled = true;
    l.handler = label(handler);
    return l;
}

struct Run {
    std::unique_ptr<Session> session;
    json report;
    std::string trace;

    const Simulator& sim() const { return session->sim(); }
    Cycles cycles() const { return session->sim().now(); }
    std::uint64_t counter(std::string_view name) const { return *counter_by_name(session->sim().counters(), name); }
    Address symbol(std::string_view name) const { return *session->symbol(name); }
};

Run run(RunConfig config) {
    Run r;
    r.session = std::make_unique<Session>(std::move(config));
    r.session->run();
    r.report = build_report(*r.session, evaluate_assertions(*r.session));
    if (r.session->config().sim.record_trace) r.trace = trace_ndjson(r.sim().trace());
    return r;
}

// r0-r12 and flags: the program counter differs whenever image layouts do.
bool same_results(const Run& a, const Run& b) {
    const auto& x = a.sim().state();
    const auto& y = b.sim().state();
    return std::equal(x.regs.begin(), x.regs.begin() + 13, y.regs.begin()) && x.flags == y.flags;
}

bool closed(const Run& r) { return r.report.contains("ledger") && r.report["ledger"]["closed"].get<bool>(); }

json check(const std::string& what, bool ok) { return {{"check", what}, {"pass", ok}}; }

// Collects named checks; the scenario passes when all of them do.
struct Checks {
    json list = json::array();
    bool pass = true;
    void add(const std::string& what, bool ok) {
        list.push_back(check(what, ok));
        pass = pass && ok;
    }
};

// ------------------------------------------------------------ literal pool

ScenarioResult literal_pool(Overrides& ov) {
    memory::FlashTiming timing;
    timing.sequential_cycles = ov.number("sequential_cycles", timing.sequential_cycles);
    timing.nonsequential_cycles = ov.number("nonsequential_cycles", timing.nonsequential_cycles);
    const auto groups = static_cast<unsigned>(ov.number("groups", 20));
    ov.finish();
    if (groups == 0 || groups > 60) throw ConfigError("overrides.groups: must be in 1..60");

    auto make = [&](const std::string& source, assembler::LoadMode mode, memory::FlashTiming t) {
        RunConfig c;
        c.name = "literal_pool_" + std::string(assembler::to_string(mode));
        c.sim.memory.flash = t;
        c.programs.push_back(program(source, mode));
        return c;
    };

    const auto heavy = programs::constant_heavy(groups);
    const auto free = programs::constant_free(groups);
    auto pool = run(make(heavy, assembler::LoadMode::Pool, timing));
    auto movw = run(make(heavy, assembler::LoadMode::Movw, timing));
    auto free_pool = run(make(free, assembler::LoadMode::Pool, timing));
    auto free_movw = run(make(free, assembler::LoadMode::Movw, timing));

    const auto penalty = pool_load_penalty(timing);
    const std::int64_t expected = static_cast<std::int64_t>(groups) * penalty;
    const std::int64_t delta = static_cast<std::int64_t>(pool.cycles()) - static_cast<std::int64_t>(movw.cycles());
    const double degradation = 100.0 * static_cast<double>(delta) / static_cast<double>(movw.cycles());
    const std::int64_t free_delta =
        static_cast<std::int64_t>(free_pool.cycles()) - static_cast<std::int64_t>(free_movw.cycles());

    // Sweep the non-sequential cost with the sequential cost fixed.
    json sweep = json::array();
    std::optional<Cycles> threshold;
    for (Cycles n = timing.sequential_cycles; n <= timing.sequential_cycles + 8; ++n) {
        auto t = timing;
        t.nonsequential_cycles = n;
        RunConfig pc = make(heavy, assembler::LoadMode::Pool, t);
        RunConfig mc = make(heavy, assembler::LoadMode::Movw, t);
        pc.sim.record_trace = mc.sim.record_trace = false;
        const auto p = run(pc).cycles();
        const auto m = run(mc).cycles();
        const double d = 100.0 * (static_cast<double>(p) - static_cast<double>(m)) / static_cast<double>(m);
        sweep.push_back({{"nonsequential_cycles", n}, {"pool_cycles", p}, {"movw_cycles", m}, {"degradation_percent", d}});
        if (!threshold && d >= 15.0) threshold = n;
    }

    Checks checks;
    checks.add("both modes halt", pool.report["pass"].get<bool>() && movw.report["pass"].get<bool>());
    checks.add("both modes compute the same registers", same_results(pool, movw));
    checks.add("cycle ledgers close", closed(pool) && closed(movw));
    checks.add("pool-mode excess equals loads x per-load penalty", delta == expected);
    checks.add("constant-free program shows no difference", free_delta == 0);
    checks.add("some flash timing degrades pool mode by at least 15%", threshold.has_value());

    ScenarioResult out;
    out.name = "literal_pool";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"timing",
                   {{"sequential_cycles", timing.sequential_cycles},
                    {"nonsequential_cycles", timing.nonsequential_cycles},
                    {"fetch_width", timing.fetch_width},
                    {"split_data_port", timing.split_data_port}}},
                  {"groups", groups},
                  {"pool_loads", groups},
                  {"per_load_penalty", penalty},
                  {"pool_cycles", pool.cycles()},
                  {"movw_cycles", movw.cycles()},
                  {"delta_cycles", delta},
                  {"expected_delta_cycles", expected},
                  {"degradation_percent", degradation},
                  {"constant_free", {{"pool_cycles", free_pool.cycles()}, {"movw_cycles", free_movw.cycles()}, {"delta_cycles", free_delta}}},
                  {"sweep", std::move(sweep)},
                  {"threshold_nonsequential_cycles", threshold ? json(*threshold) : json(nullptr)},
                  {"runs", {{"pool", pool.report}, {"movw", movw.report}}},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    out.trace = pool.trace + movw.trace;
    return out;
}

// -------------------------------------------------------------- tail chain

ScenarioResult tail_chain(Overrides& ov) {
    const auto separation = ov.number("separation", 600);
    const auto iterations = static_cast<unsigned>(ov.number("iterations", 400));
    ov.finish();
    if (iterations == 0 || iterations > 0xFFFF) throw ConfigError("overrides.iterations: must be in 1..65535");

    auto make = [&](Cycles second) {
        RunConfig c;
        c.name = "tail_chain";
        ProgramSpec p = program(programs::tail_chain(iterations));
        p.origin = 0x20000000u;
        c.programs.push_back(p);
        c.lines = {line(0, 1, "isr_a"), line(1, 2, "isr_b")};
        c.stimuli = {{100, 0}, {second, 1}};
        return c;
    };
    auto burst = run(make(100));
    auto apart = run(make(100 + separation));

    const auto& costs = burst.sim().nvic().costs();
    const std::int64_t saved = static_cast<std::int64_t>(apart.cycles()) - static_cast<std::int64_t>(burst.cycles());
    const std::int64_t expected =
        static_cast<std::int64_t>(costs.stacking + costs.unstack) - static_cast<std::int64_t>(costs.tailchain);

    Checks checks;
    checks.add("both runs halt", burst.report["pass"].get<bool>() && apart.report["pass"].get<bool>());
    checks.add("main loop completes in both runs",
               burst.sim().state().regs[0] == iterations && apart.sim().state().regs[0] == iterations);
    checks.add("burst: one stacking, one unstack, one tail-chain",
               burst.counter("stackings") == 1 && burst.counter("unstackings") == 1 && burst.counter("tail_chains") == 1);
    checks.add("separated: two stackings, two unstacks, no tail-chain",
               apart.counter("stackings") == 2 && apart.counter("unstackings") == 2 && apart.counter("tail_chains") == 0);
    checks.add("cycles saved equal stacking + unstack - tailchain", saved == expected);
    checks.add("cycle ledgers close", closed(burst) && closed(apart));

    ScenarioResult out;
    out.name = "tail_chain";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"costs", {{"stacking", costs.stacking}, {"unstack", costs.unstack}, {"tailchain", costs.tailchain}, {"refill", costs.refill}}},
                  {"separation", separation},
                  {"burst_cycles", burst.cycles()},
                  {"separated_cycles", apart.cycles()},
                  {"saved_cycles", saved},
                  {"expected_saved_cycles", expected},
                  {"runs", {{"burst", burst.report}, {"separated", apart.report}}},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    out.trace = burst.trace + apart.trace;
    return out;
}

// ------------------------------------------------------ bit-band semaphore

struct Boundary {
    Cycles cycle = 0;
    Address pc = 0;
};

// Start cycle and address of every instruction the main program retires,
// from an uninterrupted run.
std::vector<Boundary> instruction_boundaries(const Simulator& sim) {
    std::vector<Boundary> out;
    for (const auto& r : sim.trace()) {
        if (r.kind == EventKind::Retire) out.push_back({r.cycle - r.cost, r.pc});
    }
    return out;
}

RunConfig bitband_config(const std::string& source) {
    RunConfig c;
    c.name = "bitband_semaphore";
    c.programs.push_back(program(source));
    c.lines = {line(0, 1, "isr")};
    return c;
}

struct Interleaving {
    Boundary before;
    std::uint32_t byte = 0;
    std::uint32_t expected = 0;
    Address isr_taken_at = 0;
    bool isr_once = false;
    std::string trace;
};

std::vector<Interleaving> enumerate(const std::string& source, const std::function<std::uint32_t(const Run&, Address)>& oracle) {
    auto clean = run(bitband_config(source));
    std::vector<Interleaving> out;
    for (const auto& b : instruction_boundaries(clean.sim())) {
        RunConfig c = bitband_config(source);
        c.stimuli = {{b.cycle, 0}};
        auto r = run(c);
        Interleaving i;
        i.before = b;
        i.byte = r.sim().memory().peek(programs::kSharedByte, 1).value_or(0xFFFF);
        i.expected = oracle(clean, b.pc);
        i.isr_once = r.counter("stackings") == 1 && r.counter("unstackings") == 1 && r.sim().status() == RunStatus::Halted;
        for (const auto& t : r.sim().trace()) {
            if (t.kind == EventKind::IrqEntry) {
                i.isr_taken_at = t.pc;
                break;
            }
        }
        i.trace = std::move(r.trace);
        out.push_back(std::move(i));
    }
    return out;
}

ScenarioResult bitband_semaphore(Overrides& ov) {
    ov.finish();
    // Where the handler lands relative to the main program's store decides
    // the expected byte.
    auto alias_oracle = [](const Run&, Address) -> std::uint32_t { return 0x28; };
    auto rmw_oracle = [](const Run& clean, Address before) -> std::uint32_t {
        const bool lost = before > clean.symbol("load") && before <= clean.symbol("store");
        return lost ? 0x08 : 0x28;
    };
    auto clear_oracle = [](const Run& clean, Address before) -> std::uint32_t {
        return before <= clean.symbol("store") ? 0x08 : 0x00;
    };

    const auto alias = enumerate(programs::bitband_alias_main(false), alias_oracle);
    const auto rmw = enumerate(programs::bitband_rmw_main(), rmw_oracle);
    const auto clear = enumerate(programs::bitband_alias_main(true), clear_oracle);

    auto table = [](const std::vector<Interleaving>& v, bool& all_match, bool& all_placed, unsigned& lost) {
        json arr = json::array();
        all_match = all_placed = !v.empty();
        lost = 0;
        for (const auto& i : v) {
            const bool match = i.byte == i.expected;
            const bool placed = i.isr_once && i.isr_taken_at == i.before.pc;
            all_match = all_match && match;
            all_placed = all_placed && placed;
            if (i.byte != 0x28) ++lost;
            arr.push_back({{"isr_before_pc", hex32(i.before.pc)},
                           {"stimulus_cycle", i.before.cycle},
                           {"byte", i.byte},
                           {"expected", i.expected},
                           {"match", match},
                           {"placed", placed}});
        }
        return arr;
    };
    bool alias_match = false, alias_placed = false, rmw_match = false, rmw_placed = false, clear_match = false,
         clear_placed = false;
    unsigned alias_lost = 0, rmw_lost = 0, clear_other = 0;
    json alias_j = table(alias, alias_match, alias_placed, alias_lost);
    json rmw_j = table(rmw, rmw_match, rmw_placed, rmw_lost);
    json clear_j = table(clear, clear_match, clear_placed, clear_other);

    Checks checks;
    checks.add("main program has at most 20 events", alias.size() <= 20 && rmw.size() <= 20);
    checks.add("handler inserted before every main instruction, exactly once", alias_placed && rmw_placed && clear_placed);
    checks.add("alias version: byte is 0x28 in every interleaving", alias_match && alias_lost == 0);
    checks.add("read-modify-write version matches the interleaving oracle", rmw_match);
    checks.add("read-modify-write version loses an update in some interleaving", rmw_lost > 0);
    checks.add("alias set/clear of one bit: last writer wins", clear_match);

    ScenarioResult out;
    out.name = "bitband_semaphore";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"shared_byte", hex32(programs::kSharedByte)},
                  {"alias", {{"interleavings", alias.size()}, {"lost_updates", alias_lost}, {"runs", alias_j}}},
                  {"read_modify_write", {{"interleavings", rmw.size()}, {"lost_updates", rmw_lost}, {"runs", rmw_j}}},
                  {"alias_clear", {{"interleavings", clear.size()}, {"runs", clear_j}}},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    for (const auto* set : {&alias, &rmw, &clear}) {
        for (const auto& i : *set) out.trace += i.trace;
    }
    return out;
}

// ---------------------------------------------------------------- soft error

RunConfig soft_error_config(memory::SoftErrorTarget target) {
    RunConfig c;
    c.name = "soft_error_" + std::string(memory::to_string(target));
    auto& regions = c.sim.memory.regions;
    switch (target) {
    case memory::SoftErrorTarget::IcacheData:
    case memory::SoftErrorTarget::IcacheTag:
        c.programs.push_back(program(programs::icache_workload()));
        for (auto& r : regions) r.cached = r.cached || r.kind == memory::RegionKind::Flash;
        c.sim.memory.icache.enabled = true;
        break;
    case memory::SoftErrorTarget::Tcm:
        c.programs.push_back(program(programs::tcm_workload()));
        break;
    case memory::SoftErrorTarget::DcacheData:
    case memory::SoftErrorTarget::DcacheTag:
        c.programs.push_back(program(programs::dcache_workload()));
        for (auto& r : regions) r.cached = r.cached || r.kind == memory::RegionKind::BitbandTarget;
        c.sim.memory.dcache.enabled = true;
        c.data_abort_handler = label("dabort");
        break;
    }
    return c;
}

ScenarioResult soft_error(Overrides& ov) {
    const auto seed = ov.number("seed", 1);
    const auto count = static_cast<unsigned>(ov.number("count", 100));
    const auto target = ov.text("target", "all");
    ov.finish();
    if (count == 0 || count > 100000) throw ConfigError("overrides.count: must be in 1..100000");

    std::vector<memory::SoftErrorTarget> targets;
    if (target == "all") {
        targets = {memory::SoftErrorTarget::IcacheData, memory::SoftErrorTarget::Tcm,
                   memory::SoftErrorTarget::DcacheData};
    } else if (auto t = memory::parse_soft_error_target(target)) {
        targets = {*t};
    } else {
        throw ConfigError("overrides.target: unknown soft-error target '" + target + "'");
    }

    json campaigns = json::array();
    json recoveries = json::object();
    std::string trace;
    unsigned identical = 0, identical_total = 0, precise = 0, precise_total = 0;
    bool pass = true;
    for (auto t : targets) {
        RunConfig c = soft_error_config(t);
        CampaignSpec spec;
        spec.seed = seed;
        spec.count = count;
        spec.target = t;
        spec.tcm_words = programs::kTcmTableWords;
        spec.at_pc = label("mark");
        const auto res = run_campaign(c, spec);
        pass = pass && res.pass;
        if (t == memory::SoftErrorTarget::DcacheData) {
            precise += res.precise_aborts;
            precise_total += static_cast<unsigned>(res.runs.size());
        } else {
            for (const auto& r : res.runs) identical += r.outputs_match && r.extra_cycles > 0 ? 1 : 0;
            identical_total += static_cast<unsigned>(res.runs.size());
        }
        for (const auto& r : res.runs) recoveries[r.recovery] = recoveries.value(r.recovery, 0) + 1;
        campaigns.push_back(res.to_json());
        trace += res.trace;
    }

    ScenarioResult out;
    out.name = "soft_error";
    out.trace = std::move(trace);
    out.pass = pass;
    out.report = {{"name", out.name},
                  {"seed", seed},
                  {"count", count},
                  {"target", target},
                  {"identical_with_extra_cycles", {{"runs", identical}, {"of", identical_total}}},
                  {"precise_aborts", {{"runs", precise}, {"of", precise_total}}},
                  {"recoveries", std::move(recoveries)},
                  {"campaigns", std::move(campaigns)},
                  {"pass", pass}};
    return out;
}

// ------------------------------------------------------------ MPU isolation

RunConfig mpu_config(Cycles period, bool mpu_enabled) {
    RunConfig c;
    c.name = "mpu_isolation";
    c.programs.push_back(program(programs::mpu_tasks()));
    c.data_abort_handler = label("dabort");
    c.lines = {line(0, 1, "timer_isr")};
    for (Cycles t = 150; t < 60000; t += period) c.stimuli.push_back({t, 0});

    auto& m = c.sim.mpu;
    m.enabled = mpu_enabled;
    m.background_privileged_allowed = true;
    m.regions[0] = {0x00000000u, 256 * 1024, mpu::Perms::from_bits(5), mpu::Perms::from_bits(5), true};
    m.regions[1] = {programs::kTaskRegionA, programs::kTaskRegionBytes, mpu::Perms::from_bits(3), mpu::Perms::from_bits(3), true};
    m.regions[2] = {programs::kSharedFlags, 32, mpu::Perms::from_bits(3), mpu::Perms::from_bits(3), true};
    return c;
}

ScenarioResult mpu_isolation(Overrides& ov) {
    const auto period = ov.number("period", 401);
    ov.finish();
    if (period < 200) throw ConfigError("overrides.period: must be at least 200 cycles");

    auto on = run(mpu_config(period, true));
    auto off = run(mpu_config(period, false));

    // Probe matrix: task t writes probe k at region A base + offset.
    struct Probe {
        unsigned task;
        Address address;
        bool expect_fault;
    };
    std::vector<Probe> probes;
    for (unsigned task = 0; task < 2; ++task) {
        const Address own = programs::kTaskRegionA + task * programs::kTaskRegionBytes;
        for (unsigned k = 0; k < programs::kProbesPerTask; ++k) {
            const unsigned off = (k % 2 == 0 ? task : 1 - task) * programs::kTaskRegionBytes + 8 * (k / 2);
            const Address a = programs::kTaskRegionA + off;
            probes.push_back({task, a, !(a >= own && a < own + programs::kTaskRegionBytes)});
        }
    }

    auto task_of = [&](const Run& r, Address pc) -> int {
        if (pc >= r.symbol("task_a") && pc < r.symbol("task_a_end")) return 0;
        if (pc >= r.symbol("task_b") && pc < r.symbol("task_b_end")) return 1;
        return -1;
    };

    std::set<std::pair<int, Address>> faulted;
    unsigned unexpected_faults = 0;
    json records = json::array();
    for (const auto& f : on.sim().faults()) {
        const int task = task_of(on, f.pc);
        const bool mpu = f.kind == FaultKind::MpuNoRegion || f.kind == FaultKind::MpuPermDenied;
        if (!mpu || task < 0 || f.access != AccessKind::Write || !faulted.insert({task, f.address}).second) {
            ++unexpected_faults;
        }
        records.push_back({{"task", task == 0 ? "A" : task == 1 ? "B" : "?"},
                           {"address", hex32(f.address)},
                           {"pc", hex32(f.pc)},
                           {"kind", to_string(f.kind)}});
    }

    const auto& mem = on.sim().memory();
    unsigned cross_writes = 0, own_writes = 0, mismatches = 0;
    json matrix = json::array();
    for (const auto& p : probes) {
        const bool did_fault = faulted.count({static_cast<int>(p.task), p.address}) != 0;
        const Word stored = mem.peek(p.address, 4).value_or(0);
        const Word marker = 'A' + p.task;
        const bool wrote = stored == marker;
        if (p.expect_fault && wrote) ++cross_writes;
        if (!p.expect_fault && wrote) ++own_writes;
        if (did_fault != p.expect_fault) ++mismatches;
        matrix.push_back({{"task", p.task == 0 ? "A" : "B"},
                          {"address", hex32(p.address)},
                          {"expected", p.expect_fault ? "fault" : "allow"},
                          {"observed", did_fault ? "fault" : "allow"}});
    }

    // The handler's own log: (task, FAULT_ADDR) pairs in fault order.
    const Word logged = mem.peek(programs::kFaultLog, 4).value_or(0);
    bool log_matches = logged == on.sim().faults().size();
    for (Word i = 0; log_matches && i < logged; ++i) {
        const Word task = mem.peek(programs::kFaultLog + 4 + 8 * i, 4).value_or(~0u);
        const Word addr = mem.peek(programs::kFaultLog + 8 + 8 * i, 4).value_or(0);
        const auto& f = on.sim().faults()[i];
        log_matches = static_cast<int>(task) == task_of(on, f.pc) && addr == f.address;
    }

    unsigned disabled_writes = 0;
    for (const auto& p : probes) disabled_writes += off.sim().memory().peek(p.address, 4).value_or(0) != 0 ? 1 : 0;

    const unsigned expected_faults =
        static_cast<unsigned>(std::count_if(probes.begin(), probes.end(), [](const Probe& p) { return p.expect_fault; }));

    Checks checks;
    checks.add("both tasks run to completion", on.report["pass"].get<bool>());
    checks.add("tasks were interleaved by the timer", on.counter("stackings") > on.counter("aborts") + 1);
    checks.add("no cross-region write succeeds", cross_writes == 0);
    checks.add("every in-region write succeeds", own_writes + expected_faults == probes.size());
    checks.add("allow/fault pattern matches the region map", mismatches == 0 && unexpected_faults == 0 &&
                                                                  faulted.size() == expected_faults);
    checks.add("handler log names the task and address of every fault", log_matches);
    checks.add("MPU disabled: every probe is allowed",
               off.report["pass"].get<bool>() && off.sim().faults().empty() && disabled_writes == probes.size());
    checks.add("minimum region size is below 4 KiB", mpu::kMinRegionSize < 4096);

    ScenarioResult out;
    out.name = "mpu_isolation";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"region_bytes", programs::kTaskRegionBytes},
                  {"min_region_bytes", mpu::kMinRegionSize},
                  {"probes", probes.size()},
                  {"expected_faults", expected_faults},
                  {"cross_region_writes", cross_writes},
                  {"fault_records", std::move(records)},
                  {"matrix", std::move(matrix)},
                  {"runs", {{"enabled", on.report}, {"disabled", off.report}}},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    out.trace = on.trace + off.trace;
    return out;
}

// ----------------------------------------------------------- LDM interrupt

RunConfig ldm_config(bool interruptible) {
    RunConfig c;
    c.name = "ldm_interrupt";
    c.programs.push_back(program(programs::ldm_workload()));
    for (auto& r : c.sim.memory.regions) r.cached = r.cached || r.kind == memory::RegionKind::BitbandTarget;
    c.sim.memory.dcache.enabled = true;
    c.sim.cpu.ldm_interruptible = interruptible;
    c.lines = {line(0, 1, "isr")};
    return c;
}

std::optional<Cycles> handler_start(const Simulator& sim) {
    for (const auto& t : sim.trace()) {
        if (t.kind == EventKind::IrqEntry) return t.cycle;
    }
    return std::nullopt;
}

ScenarioResult ldm_interrupt(Overrides& ov) {
    ov.finish();

    auto oracle = run(ldm_config(true));
    const Address site = oracle.symbol("ldm_site");
    // The LDM's memory phase starts with its first miss; its issue and fetch
    // cycles come before that.
    Cycles first_beat = 0;
    for (const auto& t : oracle.sim().trace()) {
        if (t.kind == EventKind::Miss && t.pc == site) {
            first_beat = t.cycle;
            break;
        }
    }

    const auto& mcfg = oracle.sim().memory().config();
    const Cycles fill = mcfg.dcache.fill_cycles_per_line;
    const auto entry = oracle.sim().nvic().entry_cycles(mcfg.flash.nonsequential_cycles);

    auto pended = [&](bool interruptible, Cycles at) {
        RunConfig c = ldm_config(interruptible);
        c.stimuli = {{at, 0}};
        return run(c);
    };
    auto latency_of = [](const Run& r, Cycles at) { return handler_start(r.sim()).value_or(at) - at; };

    // Worst case over every arrival cycle during the first line fill.
    Cycles worst = 0;
    json sweep = json::array();
    for (Cycles at = first_beat; at < first_beat + fill; ++at) {
        const auto r = pended(true, at);
        const auto l = latency_of(r, at);
        worst = std::max(worst, l);
        sweep.push_back({{"pend_cycle", at}, {"latency_cycles", l}, {"ldm_interrupted", r.counter("ldm_interrupted")}});
    }

    auto inter = pended(true, first_beat);
    auto base = pended(false, first_beat);
    const auto latency = latency_of(inter, first_beat);
    const auto baseline = latency_of(base, first_beat);

    const Word sp = inter.sim().cpu_config().initial_sp;
    const std::vector<std::pair<Address, Address>> exclude = {{sp - 1024, sp},
                                                                {programs::kLdmIsrScratch, programs::kLdmIsrScratch + 4}};
    const bool same = snapshot_outputs(inter.sim(), exclude) == snapshot_outputs(oracle.sim(), exclude) &&
                      same_results(inter, oracle);

    Checks checks;
    checks.add("all runs halt",
               oracle.report["pass"].get<bool>() && inter.report["pass"].get<bool>() && base.report["pass"].get<bool>());
    checks.add("LDM spans three cold lines", oracle.counter("dcache_fills") == 3);
    checks.add("interrupt taken inside the LDM", inter.counter("ldm_interrupted") == 1);
    checks.add("handler ran once", inter.sim().memory().peek(programs::kLdmIsrScratch, 4).value_or(0) == 1);
    checks.add("latency <= one line fill + entry", latency <= fill + entry && worst <= fill + entry);
    checks.add("latency < non-interruptible baseline", latency < baseline);
    checks.add("restarted LDM ends in the uninterrupted state", same);
    checks.add("base writeback applied once", inter.sim().state().regs[0] == programs::kLdmSource + 40);
    checks.add("cycle ledgers close", closed(oracle) && closed(inter) && closed(base));

    ScenarioResult out;
    out.name = "ldm_interrupt";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"first_beat_cycle", first_beat},
                  {"fill_cycles", fill},
                  {"entry_cycles", entry},
                  {"latency_cycles", latency},
                  {"worst_latency_cycles", worst},
                  {"latency_bound", fill + entry},
                  {"baseline_latency_cycles", baseline},
                  {"baseline_bound", 3 * fill + entry},
                  {"arrival_sweep", std::move(sweep)},
                  {"runs", {{"oracle", oracle.report}, {"interruptible", inter.report}, {"baseline", base.report}}},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    out.trace = oracle.trace + inter.trace + base.trace;
    return out;
}

// -------------------------------------------------------------------- FPB

ScenarioResult fpb(Overrides& ov) {
    ov.finish();
    RunConfig c;
    c.name = "fpb";
    c.programs.push_back(program(programs::fpb_workload()));
    for (unsigned i = 0; i < 8; ++i) {
        FpbSpec f;
        f.entry = i;
        f.address = label("bp" + std::to_string(i));
        c.fpb.push_back(f);
    }

    Session s(c);
    json stops = json::array();
    bool in_order = true;
    unsigned hits = 0;
    for (unsigned guard = 0; guard < 16; ++guard) {
        const auto st = s.run();
        if (st != RunStatus::Breakpoint) break;
        const Address pc = s.sim().state().pc();
        in_order = in_order && hits < 8 && pc == *s.symbol("bp" + std::to_string(hits));
        stops.push_back({{"pc", hex32(pc)}, {"cycle", s.sim().now()}});
        ++hits;
        s.sim().resume();
    }
    const bool finished = s.sim().status() == RunStatus::Halted && s.sim().state().regs[8] == 36;
    const std::string trace = trace_ndjson(s.sim().trace());
    const json stop_report = build_report(s, evaluate_assertions(s));

    // A ninth comparator does not exist.
    std::string rejection;
    try {
        s.sim().memory().fpb_configure(8, memory::FpbEntry{*s.symbol("patch_site"), memory::FpbMode::Breakpoint, 0});
    } catch (const ConfigError& e) {
        rejection = e.what();
    }
    std::string config_rejection;
    {
        RunConfig nine = c;
        FpbSpec f;
        f.entry = 8;
        f.address = label("patch_site");
        nine.fpb.push_back(f);
        try {
            Session bad(nine);
        } catch (const ConfigError& e) {
            config_rejection = e.what();
        }
    }

    // Remap the word holding `mov r0, #1; mov r1, #2` so its first halfword
    // becomes `mov r0, #5`.
    RunConfig plain;
    plain.name = "fpb_remap";
    plain.programs.push_back(program(programs::fpb_workload()));
    auto before = run(plain);
    const Address site = before.symbol("patch_site");
    const Word original = before.sim().memory().peek(site, 4).value_or(0);
    const auto replacement = assembler::assemble("mov r0, #5\n");
    const Word patch_hw = Word{replacement.segments.at(0).bytes.at(0)} | Word{replacement.segments.at(0).bytes.at(1)} << 8;
    const Word patched_word = (original & 0xFFFF0000u) | patch_hw;

    RunConfig remap = plain;
    FpbSpec rf;
    rf.entry = 0;
    rf.address = {site, "<scenario>"};
    rf.mode = memory::FpbMode::Remap;
    rf.remap_value = patched_word;
    remap.fpb = {rf};
    auto after = run(remap);
    const auto& r0 = before.sim().state().regs;
    const auto& r1 = after.sim().state().regs;

    Checks checks;
    checks.add("eight breakpoints halt at their addresses in order", hits == 8 && in_order);
    checks.add("program completes after the last breakpoint", finished);
    checks.add("a ninth comparator is rejected", !rejection.empty() && !config_rejection.empty());
    checks.add("unpatched program computes r2 = 3", before.report["pass"].get<bool>() && r0[0] == 1 && r0[2] == 3);
    checks.add("remap patches one instruction", after.report["pass"].get<bool>() && r1[0] == 5 && r1[1] == 2 && r1[2] == 7);
    checks.add("flash contents unchanged by the remap", after.sim().memory().peek(site, 4).value_or(0) == original);

    ScenarioResult out;
    out.name = "fpb";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"stops", std::move(stops)},
                  {"ninth_entry_error", rejection},
                  {"ninth_entry_config_error", config_rejection},
                  {"patch_site", hex32(site)},
                  {"original_word", hex32(original)},
                  {"remap_word", hex32(patched_word)},
                  {"runs", {{"breakpoints", stop_report}, {"unpatched", before.report}, {"patched", after.report}}},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    out.trace = trace + before.trace + after.trace;
    return out;
}

// ------------------------------------------------------------ code density

ScenarioResult code_density(Overrides& ov) {
    ov.finish();
    RunConfig c;
    c.name = "code_density";
    c.programs.push_back(program(programs::density_reference()));
    auto r = run(c);
    const auto size = assembler::code_size_report(r.session->programs().front().image);

    Checks checks;
    checks.add("reference program runs to completion", r.report["pass"].get<bool>());
    checks.add("mixed-width size <= 70% of all-32-bit size", size.ratio <= 0.70);

    ScenarioResult out;
    out.name = "code_density";
    out.pass = checks.pass;
    out.report = {{"name", out.name},
                  {"code_size", code_size_json(size)},
                  {"run", r.report},
                  {"checks", checks.list},
                  {"pass", out.pass}};
    out.trace = r.trace;
    return out;
}

using ScenarioFn = ScenarioResult (*)(Overrides&);

const std::map<std::string, ScenarioFn, std::less<>>& registry() {
    static const std::map<std::string, ScenarioFn, std::less<>> r = {
        {"literal_pool", literal_pool}, {"tail_chain", tail_chain},       {"bitband_semaphore", bitband_semaphore},
        {"soft_error", soft_error},     {"mpu_isolation", mpu_isolation}, {"ldm_interrupt", ldm_interrupt},
        {"fpb", fpb},                   {"code_density", code_density},
    };
    return r;
}

} // namespace

std::int64_t pool_load_penalty(const memory::FlashTiming& t, unsigned ldr_bytes) {
    auto beats = [&](unsigned bytes) { return static_cast<std::int64_t>((bytes + t.fetch_width - 1) / t.fetch_width); };
    const auto s = static_cast<std::int64_t>(t.sequential_cycles);
    const auto n = static_cast<std::int64_t>(t.nonsequential_cycles);
    // Literal load: issue, its own fetch, a non-sequential data read from the
    // pool, then the instruction stream restarts non-sequentially.
    const std::int64_t load = 1 + s * beats(ldr_bytes) + n + (beats(4) - 1) * s + (t.split_data_port ? 0 : n - s);
    const std::int64_t pair = 2 * (1 + s * beats(4));
    return load - pair;
}

std::vector<std::string> scenario_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
}

ScenarioResult run_scenario(std::string_view name, const json& overrides) {
    const auto& r = registry();
    const auto it = r.find(name);
    if (it == r.end()) throw ConfigError("scenario: unknown scenario '" + std::string(name) + "'");
    Overrides ov(name, overrides);
    return it->second(ov);
}

} // namespace t2sim::harness
