#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "t2sim/common.hpp"
#include "t2sim/isa/instruction.hpp"

namespace t2sim::assembler {

// How `ldr rd, =value` is lowered: a PC-relative load from a literal pool, or
// a MOVW/MOVH pair carrying the constant inside the instruction stream.
enum class LoadMode : std::uint8_t { Pool, Movw };

std::string_view to_string(LoadMode m);
std::optional<LoadMode> parse_load_mode(std::string_view text);

class AsmError : public std::runtime_error {
public:
    AsmError(unsigned line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    unsigned line() const { return line_; }

private:
    unsigned line_;
};

struct AsmOptions {
    std::optional<LoadMode> mode;       // overrides any .mode directive in the source
    Address origin = 0;                 // start address before the first .org
    std::uint32_t pool_reach = 4096;    // max distance from a literal load to its pool entry
    std::int32_t wide_branch_range = 1 << 20;
};

struct InstructionRecord {
    Address address = 0;
    isa::Instruction insn;
    unsigned line = 0;
    std::optional<std::string> target; // branch or table-dispatch label
};

struct PoolEntry {
    Address address = 0;
    Word value = 0;
    std::string key; // source form of the constant
};

struct LiteralPool {
    Address address = 0;   // first byte, including alignment padding
    std::uint32_t bytes = 0; // padding + entries
    std::vector<PoolEntry> entries;
};

struct Segment {
    Address base = 0;
    std::vector<std::uint8_t> bytes;

    std::uint64_t end() const { return std::uint64_t{base} + bytes.size(); }
};

struct ProgramImage {
    LoadMode mode = LoadMode::Pool;
    Address entry = 0; // `start` if defined, else the first instruction
    std::vector<Segment> segments;
    std::vector<InstructionRecord> instructions;
    std::vector<LiteralPool> pools;
    std::map<std::string, Address> symbols;
    std::uint64_t pool_bytes = 0;
    std::uint64_t data_bytes = 0; // .word/.space/.align/jump tables, including padding

    std::uint64_t size_bytes() const;
    std::optional<Address> symbol(std::string_view name) const;
};

struct CodeSizeReport {
    std::uint64_t count16 = 0;
    std::uint64_t count32 = 0;
    std::uint64_t instruction_bytes = 0;
    std::uint64_t pool_bytes = 0;
    std::uint64_t data_bytes = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t all32_bytes = 0; // same image with every instruction counted at 32 bits
    double ratio = 0.0;            // total_bytes / all32_bytes
};

// Two-pass assembly with grow-only width relaxation. Throws AsmError.
ProgramImage assemble(std::string_view source, const AsmOptions& options = {});

CodeSizeReport code_size_report(const ProgramImage& image);

// Contiguous bytes from the lowest segment base to the highest segment end,
// gaps zero-filled.
struct FlatBinary {
    Address base = 0;
    std::vector<std::uint8_t> bytes;
};
FlatBinary flat_binary(const ProgramImage& image);

} // namespace t2sim::assembler
