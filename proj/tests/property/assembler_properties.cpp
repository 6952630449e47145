#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "support/sim_support.hpp"
#include "t2sim/harness/programs.hpp"
#include "t2sim/harness/runner.hpp"
#include "t2sim/isa/encoding.hpp"

using namespace t2sim;
using namespace t2sim::assembler;

namespace {

std::vector<std::string> corpus() {
    namespace p = harness::programs;
    return {p::density_reference(), p::mpu_tasks(),        p::constant_heavy(30), p::constant_free(5),
            p::icache_workload(),   p::tcm_workload(),     p::dcache_workload(),  p::ldm_workload(),
            p::fpb_workload(),      p::tail_chain(10),     p::bitband_rmw_main(), p::bitband_alias_main(false)};
}

// Straight-line program mixing constant loads, ALU work and stores.
std::string random_program(std::mt19937_64& rng, unsigned length) {
    std::ostringstream s;
    s << ".org 0x100\nstart:\n ldr r7, =0x20000000\n";
    for (unsigned i = 0; i < length; ++i) {
        const unsigned rd = static_cast<unsigned>(rng() % 7);
        const unsigned rn = static_cast<unsigned>(rng() % 7);
        switch (rng() % 6) {
        case 0: s << " ldr r" << rd << ", =0x" << std::hex << static_cast<Word>(rng() % 4 == 0 ? rng() % 16 : rng()) << std::dec << "\n"; break;
        case 1: s << " add r" << rd << ", r" << rn << ", r" << (rng() % 7) << "\n"; break;
        case 2: s << " eor r" << rd << ", r" << rn << ", #" << (rng() % 200) << "\n"; break;
        case 3: s << " str r" << rd << ", [r7, #" << 4 * (rng() % 16) << "]\n"; break;
        case 4: s << " lsl r" << rd << ", r" << rn << ", #" << (1 + rng() % 30) << "\n"; break;
        default: s << " ldr r" << rd << ", [r7, #" << 4 * (rng() % 16) << "]\n"; break;
        }
        if (rng() % 40 == 0) s << " b skip" << i << "\n .pool\nskip" << i << ":\n";
    }
    s << " halt\n";
    return s.str();
}

ProgramImage asm_mode(const std::string& src, LoadMode mode) {
    AsmOptions o;
    o.mode = mode;
    return assemble(src, o);
}

} // namespace

TEST(AssemblerProperty, AssemblyIsDeterministic) {
    std::mt19937_64 rng(31);
    auto sources = corpus();
    for (int i = 0; i < 50; ++i) sources.push_back(random_program(rng, 40));
    for (const auto& src : sources) {
        for (auto mode : {LoadMode::Pool, LoadMode::Movw}) {
            const auto a = flat_binary(asm_mode(src, mode));
            const auto b = flat_binary(asm_mode(src, mode));
            ASSERT_EQ(a.base, b.base);
            ASSERT_EQ(a.bytes, b.bytes);
        }
    }
}

TEST(AssemblerProperty, AddressesAndSizesAreConsistent) {
    std::mt19937_64 rng(32);
    auto sources = corpus();
    for (int i = 0; i < 50; ++i) sources.push_back(random_program(rng, 60));
    for (const auto& src : sources) {
        for (auto mode : {LoadMode::Pool, LoadMode::Movw}) {
            const auto img = asm_mode(src, mode);
            std::uint64_t insn_bytes = 0;
            for (std::size_t i = 0; i < img.instructions.size(); ++i) {
                const auto& r = img.instructions[i];
                insn_bytes += r.insn.width_bits / 8u;
                if (i > 0) ASSERT_GT(r.address, img.instructions[i - 1].address);
                if (r.target && (r.insn.op == isa::Opcode::B || r.insn.op == isa::Opcode::BL)) {
                    const auto sym = img.symbol(*r.target);
                    ASSERT_TRUE(sym) << *r.target;
                    ASSERT_EQ(r.address + static_cast<Address>(r.insn.offset), *sym) << *r.target;
                }
            }
            ASSERT_EQ(insn_bytes + img.pool_bytes + img.data_bytes, img.size_bytes());
            std::uint64_t seg_bytes = 0;
            for (const auto& seg : img.segments) seg_bytes += seg.bytes.size();
            ASSERT_EQ(seg_bytes, img.size_bytes());
            const auto rep = code_size_report(img);
            ASSERT_EQ(rep.count16 * 2 + rep.count32 * 4, rep.instruction_bytes);
            ASSERT_EQ(rep.total_bytes, img.size_bytes());
            ASSERT_EQ(rep.all32_bytes, 4 * (rep.count16 + rep.count32) + rep.pool_bytes + rep.data_bytes);
        }
    }
}

TEST(AssemblerProperty, WidthsAreLegalAndMinimal) {
    std::mt19937_64 rng(33);
    auto sources = corpus();
    for (int i = 0; i < 30; ++i) sources.push_back(random_program(rng, 60));
    for (const auto& src : sources) {
        const auto img = assemble(src);
        for (const auto& r : img.instructions) {
            ASSERT_TRUE(r.insn.width_bits == 16 || r.insn.width_bits == 32);
            ASSERT_NO_THROW(isa::encode(r.insn)) << isa::disassemble(r.insn);
            // branches and literal loads depend on layout; relaxation only grows them
            if (r.insn.op == isa::Opcode::B || r.insn.op == isa::Opcode::BL || r.insn.form == isa::Form::Literal) continue;
            auto probe = r.insn;
            probe.width_bits = 16;
            ASSERT_EQ(r.insn.width_bits == 16, isa::fits_narrow(probe)) << isa::disassemble(r.insn);
            switch (r.insn.op) {
            case isa::Opcode::MOVW:
            case isa::Opcode::MOVH:
            case isa::Opcode::BFI:
            case isa::Opcode::BFC:
            case isa::Opcode::UBFX:
            case isa::Opcode::RBIT:
            case isa::Opcode::UDIV:
            case isa::Opcode::SDIV:
            case isa::Opcode::TB:
                ASSERT_EQ(r.insn.width_bits, 32);
                break;
            case isa::Opcode::IT:
            case isa::Opcode::NOP:
                ASSERT_EQ(r.insn.width_bits, 16);
                break;
            default:
                break;
            }
        }
    }
}

TEST(AssemblerProperty, PoolsDeduplicateAndStayInReach) {
    std::mt19937_64 rng(34);
    for (int i = 0; i < 100; ++i) {
        const auto img = asm_mode(random_program(rng, 80), LoadMode::Pool);
        for (const auto& pool : img.pools) {
            std::set<Word> seen;
            for (const auto& e : pool.entries) {
                ASSERT_TRUE(seen.insert(e.value).second) << "duplicate constant in one pool";
                ASSERT_EQ(e.address % 4, 0u);
            }
        }
        for (const auto& r : img.instructions) {
            if (r.insn.form != isa::Form::Literal) continue;
            const Address target = ((r.address + 4) & ~Address{3}) + r.insn.imm;
            ASSERT_LE(target - r.address, 4096u);
            bool found = false;
            for (const auto& pool : img.pools) {
                for (const auto& e : pool.entries) found = found || e.address == target;
            }
            ASSERT_TRUE(found) << "literal load misses every pool entry";
        }
    }
}

TEST(AssemblerProperty, LoadModesAreObservationallyEquivalent) {
    std::mt19937_64 rng(35);
    auto sources = std::vector<std::string>{harness::programs::constant_heavy(20), harness::programs::density_reference()};
    for (int i = 0; i < 60; ++i) sources.push_back(random_program(rng, 50));
    for (const auto& src : sources) {
        auto pool = t2test::run(src, 0, LoadMode::Pool);
        auto movw = t2test::run(src, 0, LoadMode::Movw);
        ASSERT_EQ(pool->sim().status(), RunStatus::Halted);
        ASSERT_EQ(movw->sim().status(), RunStatus::Halted);
        const auto a = harness::snapshot_outputs(pool->sim());
        const auto b = harness::snapshot_outputs(movw->sim());
        ASSERT_EQ(a.regs, b.regs);
        ASSERT_EQ(a.flags, b.flags);
        ASSERT_TRUE(a.memory == b.memory);
    }
}
