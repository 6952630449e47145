#include <random>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "support/sim_support.hpp"
#include "t2sim/harness/programs.hpp"
#include "t2sim/mpu/mpu.hpp"
#include "t2sim/nvic/nvic.hpp"

using namespace t2sim;

namespace {

unsigned access_bit(AccessKind k) { return k == AccessKind::Read ? 1u : k == AccessKind::Write ? 2u : 4u; }

oracle::MpuVerdict verdict(mpu::Decision d) {
    switch (d) {
    case mpu::Decision::Allow: return oracle::MpuVerdict::Allow;
    case mpu::Decision::NoRegion: return oracle::MpuVerdict::NoRegion;
    case mpu::Decision::PermDenied: return oracle::MpuVerdict::PermDenied;
    }
    return oracle::MpuVerdict::NoRegion;
}

harness::LineSpec line(unsigned id, std::uint8_t prio, const std::string& handler, bool nmi = false) {
    harness::LineSpec l;
    l.line.id = id;
    l.line.priority = prio;
    l.line.enabled = true;
    l.line.nmi = nmi;
    l.handler = harness::AddressRef{handler, "test"};
    return l;
}

} // namespace

TEST(MpuProperty, RandomConfigsMatchTopDownScan) {
    std::mt19937_64 rng(21);
    for (int cfg_i = 0; cfg_i < 300; ++cfg_i) {
        mpu::MpuConfig cfg;
        std::array<oracle::MpuSlot, 8> slots{};
        cfg.enabled = rng() % 8 != 0;
        cfg.background_privileged_allowed = rng() & 1;
        for (unsigned i = 0; i < mpu::kRegionCount; ++i) {
            if (rng() % 3 == 0) continue;
            const std::uint64_t size = std::uint64_t{32} << (rng() % 8);
            const Address base = 0x20000000u + static_cast<Address>((rng() % 64) * size) % 0x4000u / size * size;
            const unsigned pb = static_cast<unsigned>(rng() % 8), ub = static_cast<unsigned>(rng() % 8);
            cfg.regions[i] = mpu::MpuRegion{base, size, mpu::Perms::from_bits(pb), mpu::Perms::from_bits(ub), true};
            slots[i] = oracle::MpuSlot{true, base, size, pb, ub};
        }
        for (int probe = 0; probe < 200; ++probe) {
            const Address addr = 0x20000000u + static_cast<Address>(rng() % 0x4400u) / 4 * 4;
            const auto kind = static_cast<AccessKind>(rng() % 3);
            const bool priv = rng() & 1;
            const auto got = mpu::check_access(cfg, addr, 4, kind, priv);
            ASSERT_EQ(verdict(got.decision), oracle::mpu_check(cfg.enabled, cfg.background_privileged_allowed, slots,
                                                               addr, access_bit(kind), priv));
            ASSERT_EQ(got.decision, mpu::check_access(cfg, addr, 4, kind, priv).decision); // pure
        }
    }
}

TEST(MpuProperty, TwoRegionOverlapHighestIndexWinsExhaustive) {
    for (unsigned lo = 0; lo < 8; ++lo) {
        for (unsigned hi = lo + 1; hi < 8; ++hi) {
            for (unsigned lo_bits = 0; lo_bits < 8; ++lo_bits) {
                for (unsigned hi_bits = 0; hi_bits < 8; ++hi_bits) {
                    mpu::MpuConfig cfg;
                    cfg.enabled = true;
                    cfg.regions[lo] = {0x20000000, 256, mpu::Perms::from_bits(lo_bits), mpu::Perms::from_bits(lo_bits), true};
                    cfg.regions[hi] = {0x20000040, 64, mpu::Perms::from_bits(hi_bits), mpu::Perms::from_bits(hi_bits), true};
                    for (auto kind : {AccessKind::Read, AccessKind::Write, AccessKind::Execute}) {
                        const auto in = mpu::check_access(cfg, 0x20000050, 4, kind, false);
                        ASSERT_EQ(in.region, hi);
                        ASSERT_EQ(in.allowed(), (hi_bits & access_bit(kind)) != 0);
                        const auto out = mpu::check_access(cfg, 0x20000000, 4, kind, false);
                        ASSERT_EQ(out.region, lo);
                        ASSERT_EQ(out.allowed(), (lo_bits & access_bit(kind)) != 0);
                    }
                }
            }
        }
    }
}

TEST(MpuProperty, DisabledMpuAllowsEverything) {
    std::mt19937_64 rng(22);
    mpu::MpuConfig cfg;
    cfg.regions[0] = {0x20000000, 32, mpu::Perms{}, mpu::Perms{}, true};
    for (int i = 0; i < 10'000; ++i) {
        ASSERT_TRUE(mpu::check_access(cfg, static_cast<Address>(rng()), 4, static_cast<AccessKind>(rng() % 3), rng() & 1).allowed());
    }
}

TEST(NvicProperty, NeverTakesEqualOrLowerPriority) {
    for (unsigned assign = 0; assign < 64; ++assign) {
        std::vector<nvic::InterruptLine> lines;
        for (unsigned id = 0; id < 3; ++id) {
            nvic::InterruptLine l;
            l.id = id;
            l.enabled = true;
            l.priority = static_cast<std::uint8_t>((assign >> (2 * id)) & 3u);
            lines.push_back(l);
        }
        for (unsigned running = 0; running < 3; ++running) {
            nvic::Nvic n(lines);
            n.pend(running);
            n.activate_line(running);
            for (unsigned other = 0; other < 3; ++other) {
                if (other != running) n.pend(other);
            }
            const auto pick = n.arbitrate(n.current_priority());
            if (pick) {
                ASSERT_LT(lines[*pick].priority, lines[running].priority);
            } else {
                for (unsigned other = 0; other < 3; ++other) {
                    if (other != running) ASSERT_GE(lines[other].priority, lines[running].priority);
                }
            }
        }
    }
}

TEST(NvicProperty, PreemptionHappensIffStrictlyHigherPriority) {
    const std::string src =
        ".org 0x100\nstart:\n mov r7, #0\n mov r8, #0\n mov r0, #0\n mov r0, #0\n mov r0, #0\n mov r0, #0\n halt\n"
        "h0:\n ldr r4, =0xE000E100\n mov r5, #1\n str r5, [r4]\n nop\n nop\n mov r8, r7\n bx lr\n"
        "h1:\n mov r7, #1\n bx lr\n";
    for (unsigned p0 = 0; p0 < 4; ++p0) {
        for (unsigned p1 = 0; p1 < 4; ++p1) {
            auto cfg = t2test::config_for(src);
            cfg.lines.push_back(line(0, static_cast<std::uint8_t>(p0), "h0"));
            cfg.lines.push_back(line(1, static_cast<std::uint8_t>(p1), "h1"));
            cfg.stimuli.push_back({8, 0});
            harness::Session s(cfg);
            s.run();
            ASSERT_EQ(s.sim().status(), RunStatus::Halted);
            EXPECT_EQ(t2test::reg(s, 8), p1 < p0 ? 1u : 0u) << p0 << "/" << p1;
            EXPECT_EQ(t2test::reg(s, 7), 1u);
        }
    }
}

TEST(NvicProperty, EntryThenReturnRestoresContextAndItState) {
    const std::string src =
        ".org 0x100\nstart:\n cmp r0, r1\n ittee cs\n addcs r2, r2, #1\n eorcs r3, r3, r0\n subcc r12, r12, #1\n"
        " orrcc r1, r1, r2\n add r4, r4, #1\n halt\n"
        "isr:\n mov r0, #0\n mov r1, #0\n mov r2, #0\n mov r3, #0\n mov r12, #0\n cmp r0, #1\n bx lr\n";
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        std::array<Word, 13> init{};
        for (auto& r : init) r = static_cast<Word>(rng());
        const isa::Flags flags{static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1),
                               static_cast<bool>(rng() & 1)};
        auto run = [&](std::optional<Cycles> at) {
            auto cfg = t2test::config_for(src);
            cfg.lines.push_back(line(0, 0, "isr"));
            if (at) cfg.stimuli.push_back({*at, 0});
            auto s = std::make_unique<harness::Session>(cfg);
            for (unsigned r = 0; r < 13; ++r) s->sim().state().regs[r] = init[r];
            s->sim().state().flags = flags;
            s->run();
            return s;
        };
        const auto ref = run(std::nullopt);
        for (Cycles at = 0; at <= t2test::last_retire_start(ref->sim()); ++at) {
            const auto s = run(at);
            ASSERT_EQ(s->sim().status(), RunStatus::Halted);
            ASSERT_EQ(s->sim().counters().stackings, 1u) << at;
            for (unsigned r = 0; r < 15; ++r) ASSERT_EQ(s->sim().state().regs[r], ref->sim().state().regs[r]) << "r" << r << " at " << at;
            ASSERT_EQ(s->sim().state().flags, ref->sim().state().flags);
        }
    }
}

TEST(NvicProperty, StackingsEqualUnstackingsEqualBursts) {
    const std::string src =
        ".org 0x100\nstart:\n movw r0, #300\nloop:\n sub r0, r0, #1\n cmp r0, #0\n bne loop\n halt\n"
        "ha:\n add r8, r8, #1\n bx lr\nhb:\n add r9, r9, #1\n bx lr\n";
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        auto cfg = t2test::config_for(src);
        cfg.lines.push_back(line(0, 1, "ha"));
        cfg.lines.push_back(line(1, 1, "hb"));
        unsigned pends = 0;
        for (int k = 0; k < 12; ++k) {
            cfg.stimuli.push_back({rng() % 1500, static_cast<unsigned>(rng() % 2)});
            ++pends;
        }
        harness::Session s(cfg);
        s.run();
        ASSERT_EQ(s.sim().status(), RunStatus::Halted);
        const auto& c = s.sim().counters();
        unsigned bursts = 0;
        bool in_burst = false;
        for (const auto& r : s.sim().trace()) {
            if (r.kind == EventKind::IrqEntry && !in_burst) {
                ++bursts;
                in_burst = true;
            }
            if (r.kind == EventKind::IrqExit) in_burst = false;
        }
        ASSERT_EQ(c.stackings, c.unstackings);
        ASSERT_EQ(c.stackings, bursts);
        ASSERT_EQ(c.stackings + c.tail_chains, t2test::reg(s, 8) + t2test::reg(s, 9));
        ASSERT_LE(t2test::reg(s, 8) + t2test::reg(s, 9), pends);
    }
}

TEST(NvicProperty, NmiLatencyBoundedByOneFillPlusEntry) {
    namespace p = harness::programs;
    auto base = t2test::config_for(p::ldm_workload());
    for (auto& r : base.sim.memory.regions) {
        if (r.name == "sram") r.cached = true;
    }
    base.sim.memory.dcache.enabled = true;
    base.lines.push_back(line(0, 0, "isr", true));
    const Cycles fill = base.sim.memory.dcache.fill_cycles_per_line;
    const Cycles issue = 1 + base.sim.memory.flash.sequential_cycles; // base cycle + sequential fetch of the LDM
    const oracle::NvicCostModel costs;
    harness::Session ref(base);
    ref.run();
    ASSERT_EQ(ref.sim().status(), RunStatus::Halted);
    std::optional<Cycles> ldm_start, ldm_end;
    for (const auto& r : ref.sim().trace()) {
        if (r.kind == EventKind::Retire && r.pc == *ref.symbol("ldm_site")) {
            ldm_start = r.cycle - r.cost;
            ldm_end = r.cycle;
        }
    }
    ASSERT_TRUE(ldm_start);
    for (Cycles at = 0; at <= t2test::last_retire_start(ref.sim()); ++at) {
        auto cfg = base;
        cfg.stimuli.push_back({at, 0});
        harness::Session s(cfg);
        s.run();
        ASSERT_EQ(s.sim().status(), RunStatus::Halted);
        std::optional<Cycles> handler_start;
        for (const auto& r : s.sim().trace()) {
            if (r.kind == EventKind::IrqEntry) {
                handler_start = r.cycle;
                break;
            }
        }
        ASSERT_TRUE(handler_start);
        const Cycles latency = *handler_start - at;
        // Once the LDM is moving data, at most one line fill stands between
        // the pend and exception entry.
        if (at >= *ldm_start + issue && at < *ldm_end) ASSERT_LE(latency, fill + costs.entry(4)) << "pended at " << at;
        // Anywhere else the issue slot of the LDM may also be in the way.
        ASSERT_LE(latency, issue + fill + costs.entry(4)) << "pended at " << at;
    }
}
