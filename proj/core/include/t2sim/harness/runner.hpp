#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2sim/harness/config.hpp"

namespace t2sim::harness {

struct LoadedProgram {
    std::string origin_name;
    assembler::ProgramImage image;
};

// A simulator assembled and loaded from a RunConfig: programs and images in
// memory, vector table written, FPB programmed, stimulus and injections
// scheduled. Throws ConfigError (or AsmError for bad sources).
class Session {
public:
    explicit Session(RunConfig config);

    Simulator& sim() { return *sim_; }
    const Simulator& sim() const { return *sim_; }
    const RunConfig& config() const { return config_; }
    const std::vector<LoadedProgram>& programs() const { return programs_; }

    std::optional<Address> symbol(std::string_view name) const;
    Address resolve(const AddressRef& ref) const;

    RunStatus run();

private:
    RunConfig config_;
    std::vector<LoadedProgram> programs_;
    std::unique_ptr<Simulator> sim_;
};

struct AssertionResult {
    std::string path;
    std::string description;
    bool pass = false;
    std::int64_t actual = 0;
};

// Evaluates the config's assertions. Without an explicit status assertion the
// run is also required to have halted.
std::vector<AssertionResult> evaluate_assertions(const Session& session);

// Final architectural output of a run: r0-r12, flags, status and the contents
// of every writable storage region outside `exclude`.
struct OutputSnapshot {
    std::vector<Word> regs;
    Word flags = 0;
    RunStatus status = RunStatus::Running;
    std::vector<std::uint8_t> memory;

    friend bool operator==(const OutputSnapshot&, const OutputSnapshot&) = default;
};
OutputSnapshot snapshot_outputs(const Simulator& sim, const std::vector<std::pair<Address, Address>>& exclude = {});

struct CampaignRun {
    std::size_t index = 0;
    memory::SoftErrorInjection injection;
    bool applied = false;
    Address flipped_address = 0;
    unsigned line = 0;
    Cycles cycles = 0;
    std::int64_t extra_cycles = 0;
    bool outputs_match = false;
    std::optional<Fault> first_abort;
    bool precise_abort = false;
    std::string recovery; // icache_refill, tag_miss, tcm_repair, data_abort, none
};

struct CampaignResult {
    memory::SoftErrorTarget target = memory::SoftErrorTarget::IcacheData;
    std::uint64_t seed = 0;
    Cycles golden_cycles = 0;
    std::vector<CampaignRun> runs;
    unsigned outputs_matching = 0;
    unsigned positive_deltas = 0;
    unsigned precise_aborts = 0;
    bool pass = false;
    std::string trace; // golden run, then the first injected run (when the base config traces)

    nlohmann::json to_json() const;
};

// Golden run plus one run per generated injection. Icache/TCM targets pass
// when every run matches the golden outputs with a positive cycle delta;
// dcache data targets pass when every run takes a data abort at exactly the
// flipped word; tag targets pass when outputs match.
CampaignResult run_campaign(const RunConfig& base, const CampaignSpec& campaign);

struct RunResult {
    RunStatus status = RunStatus::Running;
    bool pass = false;
    nlohmann::json report;
    std::string trace; // NDJSON, empty when tracing is off
};

RunResult run_config(const RunConfig& config);

// Report document for a finished session.
nlohmann::json build_report(const Session& session, const std::vector<AssertionResult>& assertions);

} // namespace t2sim::harness
