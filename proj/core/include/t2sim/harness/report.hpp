#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "t2sim/assembler/assembler.hpp"
#include "t2sim/simulator.hpp"

namespace t2sim::harness {

// Hex text used for addresses and register values in every document.
std::string hex32(Word v);

nlohmann::json trace_record_json(const TraceRecord& rec);
// Newline-delimited trace: one JSON object per line, keys sorted.
std::string trace_ndjson(const std::vector<TraceRecord>& trace);

nlohmann::json counters_json(const Counters& c);
nlohmann::json registers_json(const isa::MachineState& s);
nlohmann::json fault_json(const Fault& f);
nlohmann::json code_size_json(const assembler::CodeSizeReport& r);

// Sidecar written next to a flat binary: entry, segments, symbols,
// per-instruction widths and the literal-pool map.
nlohmann::json image_sidecar_json(const assembler::ProgramImage& image);

// Canonical text form of a document: sorted keys, two-space indent, trailing newline.
std::string dump(const nlohmann::json& doc);

} // namespace t2sim::harness
