#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2sim/assembler/assembler.hpp"
#include "t2sim/simulator.hpp"

namespace t2sim::harness {

inline constexpr Cycles kDefaultCycleLimit = 10'000'000;

// A number, or a label resolved against the assembled programs' symbols.
struct AddressRef {
    std::variant<Address, std::string> value;
    std::string path; // config field, for diagnostics
};

struct ProgramSpec {
    std::string source;              // assembly text
    std::string origin_name;         // file path or "<inline>"
    std::optional<assembler::LoadMode> mode;
    Address origin = 0;
};

struct ImageSpec {
    std::vector<std::uint8_t> bytes;
    Address base = 0;
    std::string origin_name;
};

struct LineSpec {
    nvic::InterruptLine line;
    std::optional<AddressRef> handler; // written into the vector table
};

struct FpbSpec {
    unsigned entry = 0;
    AddressRef address;
    memory::FpbMode mode = memory::FpbMode::Breakpoint;
    Word remap_value = 0;
};

struct InjectionSpec {
    memory::SoftErrorInjection injection;
    std::optional<Cycles> at_cycle;
    std::optional<AddressRef> at_pc;
    unsigned occurrence = 1;
};

struct CampaignSpec {
    std::uint64_t seed = 0;
    unsigned count = 0;
    memory::SoftErrorTarget target = memory::SoftErrorTarget::IcacheData;
    unsigned tcm_words = 0;
    std::optional<Cycles> at_cycle;
    std::optional<AddressRef> at_pc;
    unsigned occurrence = 1;
};

enum class Compare : std::uint8_t { Equals, Min, Max };

struct Assertion {
    enum class Kind : std::uint8_t { Register, Memory, Status, Counter, Cycles, Faults };
    Kind kind = Kind::Register;
    unsigned reg = 0;
    AddressRef address;
    unsigned size = 4;
    std::string name;   // counter name or status name
    Compare compare = Compare::Equals;
    std::int64_t value = 0;
    std::string path;
};

struct RunConfig {
    std::string name = "run";
    SimConfig sim;
    std::vector<ProgramSpec> programs;
    std::vector<ImageSpec> images;
    std::optional<AddressRef> entry;
    std::optional<AddressRef> data_abort_handler;
    std::optional<AddressRef> prefetch_abort_handler;
    std::vector<LineSpec> lines;
    std::vector<Stimulus> stimuli;
    std::vector<FpbSpec> fpb;
    std::vector<InjectionSpec> injections;
    std::optional<CampaignSpec> campaign;
    std::vector<Assertion> assertions;
    Cycles cycle_limit = kDefaultCycleLimit;
};

// Parses a configuration document. Relative program/image paths resolve
// against `base_dir`. Throws ConfigError naming the offending field path.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config_file(const std::filesystem::path& path);

// Counter lookup by report name ("icache_fills", "stackings", ...).
std::optional<std::uint64_t> counter_by_name(const Counters& c, std::string_view name);
std::vector<std::string> counter_names();

} // namespace t2sim::harness
