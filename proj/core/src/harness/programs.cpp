#include "t2sim/harness/programs.hpp"

#include <cstdio>
#include <sstream>

namespace t2sim::harness::programs {

namespace {

std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", v);
    return buf;
}

// `movw rd, #lo` + `movh rd, #hi`
std::string load32(const char* rd, std::uint32_t v) {
    return std::string("    movw ") + rd + ", #" + hex(v & 0xFFFFu) + "\n    movh " + rd + ", #" + hex(v >> 16) + "\n";
}

} // namespace

std::string constant_heavy(unsigned groups) {
    std::ostringstream s;
    s << "; one literal load per six instruction fetches\n"
         "start:\n"
         "    mov r1, #0\n"
         "    mov r2, #0\n";
    for (unsigned g = 0; g < groups; ++g) {
        s << "    ldr r0, =" << hex(0x12340000u + 0x111u * g) << "\n"
          << "    add r1, r1, r0\n"
             "    eor r2, r2, r1\n"
             "    lsl r3, r1, #1\n"
             "    add r4, r4, #3\n"
             "    sub r5, r5, #1\n";
    }
    s << "    halt\n";
    return s.str();
}

std::string constant_free(unsigned groups) {
    std::ostringstream s;
    s << "start:\n"
         "    mov r1, #0\n"
         "    mov r2, #0\n";
    for (unsigned g = 0; g < groups; ++g) {
        s << "    mov r0, #" << (g & 0xFFu) << "\n"
          << "    add r1, r1, r0\n"
             "    eor r2, r2, r1\n"
             "    lsl r3, r1, #1\n"
             "    add r4, r4, #3\n"
             "    sub r5, r5, #1\n";
    }
    s << "    halt\n";
    return s.str();
}

std::string tail_chain(unsigned iterations) {
    std::ostringstream s;
    s << "start:\n"
         "    mov r0, #0\n"
         "    movw r1, #" << iterations << "\n"
         "loop:\n"
         "    add r0, r0, #1\n"
         "    cmp r0, r1\n"
         "    bne loop\n"
         "    halt\n"
         "\n"
         "; handlers are plain code: the controller saves and restores context\n"
         "isr_a:\n"
         "    mov r2, #0\n"
         "    add r2, r2, #5\n"
         "    add r2, r2, #7\n"
         "    bx lr\n"
         "isr_b:\n"
         "    mov r3, #1\n"
         "    lsl r3, r3, #4\n"
         "    bx lr\n";
    return s.str();
}

std::string bitband_alias_main(bool isr_clears) {
    // alias = 0x22000000 + 8 * (byte - 0x20000000) + bit
    const std::uint32_t bit3 = 0x22000000u + 8 * (kSharedByte - 0x20000000u) + 3;
    const std::uint32_t isr_bit = isr_clears ? bit3 : bit3 + 2;
    std::ostringstream s;
    s << ".org 0x400\n"
         "start:\n"
         "    mov r4, #0\n"
      << load32("r0", bit3)
      << "    mov r1, #1\n"
         "store:\n"
         "    strb r1, [r0]\n"
         "    add r4, r4, #1\n"
         "    halt\n"
         "isr:\n"
      << load32("r2", isr_bit) << "    mov r3, #" << (isr_clears ? 0 : 1) << "\n"
      << "    strb r3, [r2]\n"
         "    bx lr\n";
    return s.str();
}

std::string bitband_rmw_main() {
    std::ostringstream s;
    s << ".org 0x400\n"
         "start:\n"
      << load32("r4", kSharedByte)
      << "load:\n"
         "    ldrb r5, [r4]\n"
         "    orr r5, r5, #8\n"
         "store:\n"
         "    strb r5, [r4]\n"
         "    halt\n"
         "isr:\n"
      << load32("r0", kSharedByte)
      << "    ldrb r1, [r0]\n"
         "    orr r1, r1, #0x20\n"
         "    strb r1, [r0]\n"
         "    bx lr\n";
    return s.str();
}

std::string icache_workload() {
    std::ostringstream s;
    s << "start:\n"
         "    bl work\n"
         "mark:\n"
         "    bl work\n"
         "    halt\n"
         "work:\n"
         "    mov r1, #0\n"
         "    mov r2, #40\n"
         "wloop:\n"
         "    add r1, r1, r2\n"
         "    rbit r3, r1\n"
         "    eor r1, r1, r3\n"
         "    lsr r3, r1, #3\n"
         "    add r1, r1, r3\n"
         "    sub r2, r2, #1\n"
         "    cmp r2, #0\n"
         "    bne wloop\n"
      << load32("r4", 0x20000000u)
      << "    str r1, [r4]\n"
         "    ubfx r5, r1, #4, #8\n"
         "    bfi r6, r5, #8, #8\n"
         "    add r7, r5, #1\n"
         "    udiv r8, r1, r7\n"
         "    str r8, [r4, #4]\n"
         "    str r6, [r4, #8]\n"
         "    bx lr\n";
    return s.str();
}

std::string tcm_workload() {
    std::ostringstream s;
    s << ".org " << hex(kTcmTable) << "\n"
      << "table:\n";
    for (unsigned i = 0; i < kTcmTableWords; ++i) s << "    .word " << hex(0x9E3779B9u * (i + 1)) << "\n";
    s << ".org 0x200\n"
         "start:\n"
         "    bl work\n"
         "mark:\n"
         "    bl work\n"
         "    halt\n"
         "work:\n"
      << load32("r0", kTcmTable) << "    mov r1, #0\n"
      << "    mov r2, #" << kTcmTableWords << "\n"
      << "tloop:\n"
         "    ldr r3, [r0]\n"
         "    add r1, r1, r3\n"
         "    eor r4, r4, r3\n"
         "    add r0, r0, #4\n"
         "    sub r2, r2, #1\n"
         "    cmp r2, #0\n"
         "    bne tloop\n"
      << load32("r5", 0x20000010u)
      << "    str r1, [r5]\n"
         "    str r4, [r5, #4]\n"
         "    bx lr\n";
    return s.str();
}

std::string dcache_workload() {
    std::ostringstream s;
    s << ".org " << hex(kDcacheTable) << "\n"
      << "dtable:\n";
    for (unsigned i = 0; i < kDcacheTableWords; ++i) s << "    .word " << hex(0x85EBCA6Bu * (i + 3)) << "\n";
    s << ".org 0x200\n"
         "start:\n"
         "    bl work\n"
         "mark:\n"
         "    bl work\n"
         "    halt\n"
         "work:\n"
      << load32("r0", kDcacheTable) << "    mov r1, #0\n"
      << "    mov r2, #" << kDcacheTableWords << "\n"
      << "dloop:\n"
         "    ldr r3, [r0]\n"
         "    add r1, r1, r3\n"
         "    add r0, r0, #4\n"
         "    sub r2, r2, #1\n"
         "    cmp r2, #0\n"
         "    bne dloop\n"
      << load32("r5", 0x20000020u)
      << "    str r1, [r5]\n"
         "    bx lr\n"
         "\n"
         "; data abort: drop the D-cache contents and retry the load\n"
         "dabort:\n"
      << load32("r0", 0xE000E400u)
      << "    mov r1, #2\n"
         "    str r1, [r0]\n"
         "    bx lr\n";
    return s.str();
}

std::string mpu_tasks() {
    std::ostringstream s;
    auto task = [&](char name, unsigned id) {
        const char marker = static_cast<char>('A' + id);
        s << "task_" << name << ":\n"
          << load32("r4", kTaskRegionA) << "    mov r8, #" << static_cast<int>(marker) << "\n";
        const unsigned own = id * kTaskRegionBytes;
        const unsigned other = (1 - id) * kTaskRegionBytes;
        for (unsigned k = 0; k < kProbesPerTask; ++k) {
            const unsigned off = (k % 2 == 0 ? own : other) + 8 * (k / 2);
            s << "    str r8, [r4, #" << off << "]\n";
        }
        s << load32("r5", kSharedFlags) << "    mov r7, #1\n"
          << "    str r7, [r5, #" << 4 * id << "]\n"
          << "spin_" << name << ":\n"
          << "    ldr r7, [r5]\n"
             "    ldr r4, [r5, #4]\n"
             "    and r7, r7, r4\n"
             "    cmp r7, #1\n"
             "    bne spin_"
          << name << "\n"
          << "    halt\n"
          << "task_" << name << "_end:\n";
    };

    s << "; privileged boot: prepare task B's saved context, drop privilege, run task A\n"
         ".org 0x100\n"
         "start:\n"
      << load32("r0", kSchedBlock)
      << "    mov r1, #0\n"
         "    str r1, [r0]\n"
         "    add r2, r0, #48\n"
         "    ldr r3, =task_b\n"
         "    str r3, [r2, #0]\n"
         "    mov r3, #0\n"
         "    str r3, [r2, #4]\n"
      << load32("r0", 0xE000E200u)
      << "    mov r1, #1\n"
         "    str r1, [r0]\n"
         "    b task_a\n"
         ".pool\n";
    task('a', 0);
    task('b', 1);

    s << "\n"
         "; timer: save the running task's context, switch to the other task and\n"
         "; move MPU slot 1 over its data region\n"
         "timer_isr:\n"
      << load32("r0", kSchedBlock)
      << "    ldr r1, [r0]\n"
         "    lsl r2, r1, #5\n"
         "    add r2, r2, r0\n"
         "    add r2, r2, #16\n"
         "    ldr r3, [sp, #24]\n"
         "    str r3, [r2, #0]\n"
         "    ldr r3, [sp, #28]\n"
         "    str r3, [r2, #4]\n"
         "    str r4, [r2, #8]\n"
         "    str r5, [r2, #12]\n"
         "    str r6, [r2, #16]\n"
         "    str r7, [r2, #20]\n"
         "    str r8, [r2, #24]\n"
         "    eor r1, r1, #1\n"
         "    str r1, [r0]\n"
         "    lsl r2, r1, #5\n"
         "    add r2, r2, r0\n"
         "    add r2, r2, #16\n"
         "    ldr r3, [r2, #0]\n"
         "    str r3, [sp, #24]\n"
         "    ldr r3, [r2, #4]\n"
         "    str r3, [sp, #28]\n"
         "    ldr r4, [r2, #8]\n"
         "    ldr r5, [r2, #12]\n"
         "    ldr r6, [r2, #16]\n"
         "    ldr r7, [r2, #20]\n"
         "    ldr r8, [r2, #24]\n"
      << load32("r0", 0xE000E004u)
      << "    mov r3, #1\n"
         "    str r3, [r0]\n"
         "    lsl r3, r1, #7\n"
      << load32("r2", kTaskRegionA)
      << "    add r3, r3, r2\n"
         "    str r3, [r0, #4]\n"
         "    mov r3, #"
      << kTaskRegionBytes << "\n"
      << "    str r3, [r0, #8]\n"
      << load32("r3", 0x8000001Bu)
      << "    str r3, [r0, #12]\n"
         "    bx lr\n"
         "\n"
         "; data abort: log (task, address) and step over the 32-bit store\n"
         "dabort:\n"
      << load32("r0", kFaultLog)
      << "    ldr r1, [r0]\n"
         "    lsl r2, r1, #3\n"
         "    add r2, r2, r0\n"
         "    add r2, r2, #4\n"
      << load32("r3", kSchedBlock)
      << "    ldr r3, [r3]\n"
         "    str r3, [r2]\n"
      << load32("r3", 0xE000E300u)
      << "    ldr r3, [r3]\n"
         "    str r3, [r2, #4]\n"
         "    add r1, r1, #1\n"
         "    str r1, [r0]\n"
         "    ldr r3, [sp, #24]\n"
         "    add r3, r3, #4\n"
         "    str r3, [sp, #24]\n"
         "    bx lr\n";
    return s.str();
}

std::string ldm_workload() {
    std::ostringstream s;
    s << ".org 0x20000400\n"
         "src_data:\n";
    for (unsigned i = 0; i < 24; ++i) s << "    .word " << hex(0xC0DE0000u + i * 0x101u) << "\n";
    s << ".org 0x200\n"
         "start:\n"
      << load32("r0", kLdmSource)
      << "    nop\n"
         "ldm_site:\n"
         "    ldm r0!, {r1-r10}\n"
      << load32("r12", 0x20000800u)
      << "    stm r12, {r1-r10}\n"
         "    halt\n"
         "isr:\n"
      << load32("r0", kLdmIsrScratch)
      << "    ldr r1, [r0]\n"
         "    add r1, r1, #1\n"
         "    str r1, [r0]\n"
         "    bx lr\n";
    return s.str();
}

std::string fpb_workload() {
    std::ostringstream s;
    s << ".org 0x100\n"
         "start:\n"
         "    mov r8, #0\n";
    for (unsigned i = 0; i < 8; ++i) s << "bp" << i << ":\n    add r8, r8, #" << (i + 1) << "\n";
    s << ".align 4\n"
         "patch_site:\n"
         "    mov r0, #1\n"
         "    mov r1, #2\n"
         "    add r2, r0, r1\n"
         "    halt\n";
    return s.str();
}

std::string density_reference() {
    return R"(; Message decoder: checksum, bit-field extraction and a command switch,
; written the way a compiler lays out small embedded functions.
start:
    movw r7, #0x0000
    movh r7, #0x2000
    mov r0, #0
    mov r1, #0
; fill a 32-byte buffer with a pattern
fill:
    lsl r2, r0, #2
    add r2, r2, r0
    strb r2, [r7, r0]
    add r0, r0, #1
    cmp r0, #32
    bne fill
; checksum and parity of the buffer
    mov r0, #0
    mov r3, #0
    mov r4, #0
sum:
    ldrb r2, [r7, r0]
    add r3, r3, r2
    eor r4, r4, r2
    add r0, r0, #1
    cmp r0, #32
    blt sum
    str r3, [r7, #32]
    str r4, [r7, #36]
; decode four commands from the buffer
    mov r5, #0
    mov r6, #0
decode:
    ldrb r0, [r7, r5]
    and r0, r0, r1
    mov r2, #3
    and r0, r0, r2
    tb r0, other
    .table c_add, c_sub, c_shift
c_add:
    add r6, r6, #7
    b next
c_sub:
    sub r6, r6, #3
    b next
c_shift:
    lsl r6, r6, #1
    b next
other:
    mov r6, #1
next:
    add r5, r5, #1
    cmp r5, #4
    blt decode
; clamp to a byte, with predication instead of branches
    cmp r6, #255
    it hi
    movhi r6, #255
    cmp r3, r4
    ite cs
    subcs r3, r3, r4
    subcc r3, r4, r3
    str r6, [r7, #40]
    str r3, [r7, #44]
; scale with the hardware divider
    mov r0, #10
    udiv r2, r3, r0
    str r2, [r7, #48]
; copy the result block
    add r0, r7, #32
    ldm r0!, {r1-r4}
    add r0, r7, #64
    stm r0!, {r1-r4}
    bl finish
    halt
finish:
    mov r0, #0
    ldr r1, [r7, #64]
    add r0, r0, r1
    ldr r1, [r7, #68]
    add r0, r0, r1
    str r0, [r7, #80]
    bx lr
)";
}

} // namespace t2sim::harness::programs
