#pragma once

#include <string>

#include "t2sim/common.hpp"

// Assembly sources used by the built-in scenarios and the acceptance suite.
namespace t2sim::harness::programs {

// `groups` repetitions of one `ldr rX, =const` followed by five ALU
// instructions, so one constant load per six instruction fetches.
std::string constant_heavy(unsigned groups);
// Same shape with the constant loads replaced by register moves.
std::string constant_free(unsigned groups);

// Counting loop in zero-wait RAM plus two small handlers, isr_a and isr_b.
std::string tail_chain(unsigned iterations);

// Shared byte at kSharedByte. The main program sets bit 3 through the
// bit-band alias; isr sets bit 5 (or clears bit 3 with `isr_clears`).
inline constexpr Address kSharedByte = 0x20000100u;
std::string bitband_alias_main(bool isr_clears);
// Same program with a plain load / OR / store in both main and the handler.
std::string bitband_rmw_main();

// Soft-error workloads. Each calls its work routine twice; the label `mark`
// is reached between the two calls.
std::string icache_workload();
inline constexpr Address kTcmTable = 0x10000000u;
inline constexpr unsigned kTcmTableWords = 32;
std::string tcm_workload();
inline constexpr Address kDcacheTable = 0x20001000u;
inline constexpr unsigned kDcacheTableWords = 64;
std::string dcache_workload();

// Two unprivileged tasks switched by a timer handler, each writing 32 probes:
// 16 into its own 128-byte region and 16 into the other task's.
inline constexpr Address kTaskRegionA = 0x20002000u;
inline constexpr Address kTaskRegionB = 0x20002080u;
inline constexpr unsigned kTaskRegionBytes = 128;
inline constexpr Address kSharedFlags = 0x20002100u;
inline constexpr Address kSchedBlock = 0x20003000u;
inline constexpr Address kFaultLog = 0x20003100u;
inline constexpr unsigned kProbesPerTask = 32;
std::string mpu_tasks();

// A 10-word LDM from the seventh word of a cache line, spanning three lines.
inline constexpr Address kLdmSource = 0x20000400u + 7 * 4;
inline constexpr Address kLdmIsrScratch = 0x20003000u;
std::string ldm_workload();

// Eight word-aligned wide instructions (labels bp0..bp7) and a remappable
// `mov r0, #1` at `patch_site`.
std::string fpb_workload();

// Control-flow-heavy compiled-style code used for the density comparison.
std::string density_reference();

} // namespace t2sim::harness::programs
