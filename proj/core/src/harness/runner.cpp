#include "t2sim/harness/runner.hpp"

#include <algorithm>

#include "t2sim/harness/report.hpp"

namespace t2sim::harness {

using nlohmann::json;

namespace {

Word default_stack_top(const memory::MemoryConfig& m) {
    for (auto kind : {memory::RegionKind::BitbandTarget, memory::RegionKind::Ram, memory::RegionKind::Tcm}) {
        for (const auto& r : m.regions) {
            if (r.kind == kind && r.writable) return static_cast<Word>(r.end());
        }
    }
    return 0;
}

bool compare(Compare c, std::int64_t actual, std::int64_t expected) {
    switch (c) {
    case Compare::Equals: return actual == expected;
    case Compare::Min: return actual >= expected;
    case Compare::Max: return actual <= expected;
    }
    return false;
}

const char* compare_text(Compare c) {
    switch (c) {
    case Compare::Equals: return "==";
    case Compare::Min: return ">=";
    case Compare::Max: return "<=";
    }
    return "?";
}

} // namespace

Session::Session(RunConfig config) : config_(std::move(config)) {
    for (const auto& p : config_.programs) {
        assembler::AsmOptions opts;
        opts.mode = p.mode;
        opts.origin = p.origin;
        try {
            programs_.push_back({p.origin_name, assembler::assemble(p.source, opts)});
        } catch (const assembler::AsmError& e) {
            throw ConfigError(p.origin_name + ": " + e.what());
        }
    }

    SimConfig sc = config_.sim;
    if (config_.entry) {
        sc.cpu.entry = resolve(*config_.entry);
    } else if (!programs_.empty()) {
        sc.cpu.entry = programs_.front().image.entry;
    } else if (!config_.images.empty()) {
        sc.cpu.entry = config_.images.front().base;
    }
    if (sc.cpu.initial_sp == 0) sc.cpu.initial_sp = default_stack_top(sc.memory);
    if (config_.data_abort_handler) sc.cpu.data_abort_handler = resolve(*config_.data_abort_handler);
    if (config_.prefetch_abort_handler) sc.cpu.prefetch_abort_handler = resolve(*config_.prefetch_abort_handler);
    sc.lines.clear();
    for (const auto& l : config_.lines) sc.lines.push_back(l.line);

    sim_ = std::make_unique<Simulator>(std::move(sc));
    auto& mem = sim_->memory();
    for (const auto& p : programs_) {
        for (const auto& seg : p.image.segments) {
            if (!mem.load(seg.base, seg.bytes)) {
                throw ConfigError(p.origin_name + ": segment at " + hex32(seg.base) + " does not fit mapped memory");
            }
        }
    }
    for (const auto& img : config_.images) {
        if (!mem.load(img.base, img.bytes)) {
            throw ConfigError(img.origin_name + ": image at " + hex32(img.base) + " does not fit mapped memory");
        }
    }
    const Address vtor = sim_->cpu_config().vector_table_base;
    for (const auto& l : config_.lines) {
        if (!l.handler) continue;
        const Address handler = resolve(*l.handler);
        if (!mem.poke(vtor + 4 * l.line.id, 4, handler)) {
            throw ConfigError(l.handler->path + ": vector table entry at " + hex32(vtor + 4 * l.line.id) +
                              " is not in mapped memory");
        }
    }
    for (const auto& f : config_.fpb) {
        memory::FpbEntry e{resolve(f.address), f.mode, f.remap_value};
        try {
            mem.fpb_configure(f.entry, e);
        } catch (const ConfigError& err) {
            throw ConfigError(f.address.path + ": " + err.what());
        }
    }
    for (const auto& s : config_.stimuli) sim_->add_stimulus(s);
    for (const auto& inj : config_.injections) {
        ScheduledInjection si;
        si.at_cycle = inj.at_cycle;
        if (inj.at_pc) si.at_pc = resolve(*inj.at_pc);
        si.occurrence = inj.occurrence;
        si.injection = inj.injection;
        sim_->schedule_injection(si);
    }
    sim_->reset();
}

std::optional<Address> Session::symbol(std::string_view name) const {
    for (const auto& p : programs_) {
        if (auto a = p.image.symbol(name)) return a;
    }
    return std::nullopt;
}

Address Session::resolve(const AddressRef& ref) const {
    if (const auto* a = std::get_if<Address>(&ref.value)) return *a;
    const auto& name = std::get<std::string>(ref.value);
    if (auto a = symbol(name)) return *a;
    throw ConfigError(ref.path + ": undefined label '" + name + "'");
}

RunStatus Session::run() { return sim_->run(config_.cycle_limit); }

std::vector<AssertionResult> evaluate_assertions(const Session& session) {
    const auto& sim = session.sim();
    std::vector<AssertionResult> out;
    bool status_asserted = false;
    for (const auto& a : session.config().assertions) {
        AssertionResult r;
        r.path = a.path;
        std::int64_t actual = 0;
        std::string subject;
        switch (a.kind) {
        case Assertion::Kind::Register:
            actual = sim.state().regs[a.reg];
            subject = "r" + std::to_string(a.reg);
            break;
        case Assertion::Kind::Memory: {
            const Address addr = session.resolve(a.address);
            auto v = sim.memory().peek(addr, a.size);
            subject = "mem[" + hex32(addr) + "]/" + std::to_string(a.size);
            if (!v) {
                r.description = subject + " is unmapped";
                out.push_back(r);
                continue;
            }
            actual = *v;
            break;
        }
        case Assertion::Kind::Status:
            status_asserted = true;
            r.pass = a.name == to_string(sim.status());
            r.description = std::string("status == ") + a.name + " (got " + to_string(sim.status()) + ")";
            out.push_back(r);
            continue;
        case Assertion::Kind::Counter:
            actual = static_cast<std::int64_t>(*counter_by_name(sim.counters(), a.name));
            subject = a.name;
            break;
        case Assertion::Kind::Cycles:
            actual = static_cast<std::int64_t>(sim.now());
            subject = "cycles";
            break;
        case Assertion::Kind::Faults:
            actual = static_cast<std::int64_t>(sim.faults().size());
            subject = "faults";
            break;
        }
        r.actual = actual;
        r.pass = compare(a.compare, actual, a.value);
        r.description = subject + " " + compare_text(a.compare) + " " + std::to_string(a.value) + " (got " +
                        std::to_string(actual) + ")";
        out.push_back(r);
    }
    if (!status_asserted) {
        AssertionResult r;
        r.path = "<implicit>";
        r.pass = sim.status() == RunStatus::Halted;
        r.description = std::string("status == halted (got ") + to_string(sim.status()) + ")";
        out.push_back(r);
    }
    return out;
}

json build_report(const Session& session, const std::vector<AssertionResult>& assertions) {
    const auto& sim = session.sim();
    json j;
    j["name"] = session.config().name;
    j["status"] = to_string(sim.status());
    j["cycles"] = sim.now();
    j["cycle_limit"] = session.config().cycle_limit;
    j["retired"] = sim.counters().retired;
    j["timeout"] = sim.status() == RunStatus::Timeout;
    j["counters"] = counters_json(sim.counters());
    j["registers"] = registers_json(sim.state());

    json sizes = json::array();
    for (const auto& p : session.programs()) {
        auto s = code_size_json(assembler::code_size_report(p.image));
        s["program"] = p.origin_name;
        s["mode"] = std::string(assembler::to_string(p.image.mode));
        sizes.push_back(std::move(s));
    }
    j["code_size"] = std::move(sizes);

    json faults = json::array();
    for (const auto& f : sim.faults()) faults.push_back(fault_json(f));
    j["faults"] = std::move(faults);

    json inj = json::array();
    for (const auto& r : sim.injections()) {
        json e = {{"index", r.index}, {"cycle", r.cycle}, {"pc", hex32(r.pc)}, {"applied", r.outcome.applied}};
        if (r.outcome.applied) {
            e["line"] = r.outcome.line;
            e["address"] = hex32(r.outcome.address);
        } else {
            e["warning"] = r.outcome.warning;
        }
        inj.push_back(std::move(e));
    }
    j["injections"] = std::move(inj);

    if (session.config().sim.record_trace) {
        Cycles sum = 0;
        for (const auto& t : sim.trace()) sum += t.cost;
        j["ledger"] = {{"trace_cost_sum", sum}, {"closed", sum == sim.now()}};
    }

    json as = json::array();
    bool pass = true;
    for (const auto& a : assertions) {
        as.push_back({{"path", a.path}, {"description", a.description}, {"pass", a.pass}});
        pass = pass && a.pass;
    }
    j["assertions"] = std::move(as);
    j["pass"] = pass;
    return j;
}

RunResult run_config(const RunConfig& config) {
    RunResult out;
    if (config.campaign) {
        auto base = config;
        base.campaign.reset();
        const auto result = run_campaign(base, *config.campaign);
        out.status = result.pass ? RunStatus::Halted : RunStatus::Fault;
        out.pass = result.pass;
        out.report = {{"name", config.name}, {"campaign", result.to_json()}, {"pass", result.pass}};
        return out;
    }
    Session session(config);
    out.status = session.run();
    const auto assertions = evaluate_assertions(session);
    out.report = build_report(session, assertions);
    out.pass = out.report["pass"].get<bool>();
    if (config.sim.record_trace) out.trace = trace_ndjson(session.sim().trace());
    return out;
}

// ------------------------------------------------------------- campaigns

OutputSnapshot snapshot_outputs(const Simulator& sim, const std::vector<std::pair<Address, Address>>& exclude) {
    OutputSnapshot s;
    for (unsigned r = 0; r <= 12; ++r) s.regs.push_back(sim.state().regs[r]);
    s.flags = isa::pack_status(sim.state().flags, sim.state().it);
    s.status = sim.status();
    for (const auto& r : sim.memory().map().regions()) {
        if (!r.writable || !r.has_storage() || r.kind == memory::RegionKind::Device) continue;
        for (std::uint64_t a = r.base; a < r.end(); a += 4) {
            const auto addr = static_cast<Address>(a);
            bool skip = false;
            for (const auto& [lo, hi] : exclude) skip = skip || (addr >= lo && addr < hi);
            if (skip) continue;
            const Word w = sim.memory().peek(addr, 4).value_or(0);
            for (unsigned b = 0; b < 4; ++b) s.memory.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
        }
    }
    return s;
}

namespace {

std::string recovery_of(const Counters& golden, const Counters& run, bool aborted) {
    if (aborted) return "data_abort";
    if (run.icache_parity_invalidations > golden.icache_parity_invalidations) return "icache_refill";
    if (run.icache_tag_errors > golden.icache_tag_errors || run.dcache_tag_errors > golden.dcache_tag_errors) {
        return "tag_miss";
    }
    if (run.repairs > golden.repairs) return "tcm_repair";
    return "none";
}

} // namespace

CampaignResult run_campaign(const RunConfig& base, const CampaignSpec& campaign) {
    CampaignResult res;
    res.target = campaign.target;
    res.seed = campaign.seed;

    RunConfig golden_cfg = base;
    golden_cfg.injections.clear();
    Session golden(golden_cfg);
    golden.run();
    res.golden_cycles = golden.sim().now();
    if (base.sim.record_trace) res.trace = trace_ndjson(golden.sim().trace());
    // The stack is scratch space for abort handlers; it is not program output.
    const Word sp = golden.sim().cpu_config().initial_sp;
    const std::vector<std::pair<Address, Address>> exclude = {{sp - 1024, sp}};
    const auto golden_out = snapshot_outputs(golden.sim(), exclude);

    const auto injections = memory::generate_campaign(campaign.seed, campaign.count, campaign.target, campaign.tcm_words);
    const bool dcache_data = campaign.target == memory::SoftErrorTarget::DcacheData;
    bool pass = true;
    for (std::size_t i = 0; i < injections.size(); ++i) {
        RunConfig cfg = golden_cfg;
        cfg.sim.record_trace = base.sim.record_trace && i == 0;
        InjectionSpec spec;
        spec.injection = injections[i];
        spec.at_cycle = campaign.at_cycle;
        spec.at_pc = campaign.at_pc;
        spec.occurrence = campaign.occurrence;
        cfg.injections = {spec};
        Session s(cfg);
        s.run();
        if (cfg.sim.record_trace) res.trace += trace_ndjson(s.sim().trace());

        CampaignRun run;
        run.index = i;
        run.injection = injections[i];
        if (!s.sim().injections().empty()) {
            const auto& o = s.sim().injections().front().outcome;
            run.applied = o.applied;
            run.flipped_address = o.address;
            run.line = o.line;
        }
        run.cycles = s.sim().now();
        run.extra_cycles = static_cast<std::int64_t>(run.cycles) - static_cast<std::int64_t>(res.golden_cycles);
        run.outputs_match = snapshot_outputs(s.sim(), exclude) == golden_out;
        for (const auto& f : s.sim().faults()) {
            if (f.kind == FaultKind::DcacheParity) {
                run.first_abort = f;
                break;
            }
        }
        run.precise_abort = run.first_abort && run.applied && run.first_abort->address == run.flipped_address;
        run.recovery = recovery_of(golden.sim().counters(), s.sim().counters(), run.first_abort.has_value());

        if (run.outputs_match) ++res.outputs_matching;
        if (run.extra_cycles > 0) ++res.positive_deltas;
        if (run.precise_abort) ++res.precise_aborts;

        bool ok = run.applied;
        if (dcache_data) {
            ok = ok && run.precise_abort;
        } else if (campaign.target == memory::SoftErrorTarget::IcacheData ||
                   campaign.target == memory::SoftErrorTarget::Tcm) {
            ok = ok && run.outputs_match && run.extra_cycles > 0;
        } else {
            ok = ok && run.outputs_match;
        }
        pass = pass && ok;
        res.runs.push_back(std::move(run));
    }
    res.pass = pass && !res.runs.empty();
    return res;
}

json CampaignResult::to_json() const {
    json runs_j = json::array();
    for (const auto& r : runs) {
        json e = {{"index", r.index},
                  {"applied", r.applied},
                  {"bit", r.injection.bit},
                  {"word", r.injection.word},
                  {"line", r.line},
                  {"address", hex32(r.flipped_address)},
                  {"cycles", r.cycles},
                  {"extra_cycles", r.extra_cycles},
                  {"outputs_match", r.outputs_match},
                  {"recovery", r.recovery}};
        if (r.first_abort) {
            e["abort_address"] = hex32(r.first_abort->address);
            e["abort_pc"] = hex32(r.first_abort->pc);
            e["precise"] = r.precise_abort;
        }
        runs_j.push_back(std::move(e));
    }
    json recoveries = json::object();
    for (const auto& r : runs) recoveries[r.recovery] = recoveries.value(r.recovery, 0) + 1;
    return {{"target", std::string(memory::to_string(target))},
            {"seed", seed},
            {"count", runs.size()},
            {"golden_cycles", golden_cycles},
            {"outputs_matching", outputs_matching},
            {"positive_deltas", positive_deltas},
            {"precise_aborts", precise_aborts},
            {"recoveries", std::move(recoveries)},
            {"runs", std::move(runs_j)},
            {"pass", pass}};
}

} // namespace t2sim::harness
