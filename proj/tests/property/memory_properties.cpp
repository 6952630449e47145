#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "support/sim_support.hpp"
#include "t2sim/memory/memory_system.hpp"

using namespace t2sim;
using namespace t2sim::memory;

TEST(MemoryProperty, AliasWritesMatchMaskAndMerge) {
    MemorySystem mem(default_memory_config());
    std::mt19937_64 rng(11);
    for (int i = 0; i < 10'000; ++i) {
        const Address byte = 0x20000000u + static_cast<Address>(rng() % (64 * 1024));
        const unsigned b = static_cast<unsigned>(rng() % 8);
        const auto before = static_cast<std::uint8_t>(rng());
        const auto value = static_cast<Word>(rng());
        mem.poke(byte, 1, before);
        ASSERT_EQ(mem.write(oracle::alias_of(byte, b), 1, value).fault, MemFault::None);
        const auto after = static_cast<std::uint8_t>(*mem.peek(byte, 1));
        ASSERT_EQ(after, oracle::bitband_merge(before, b, value));
        ASSERT_EQ((after ^ before) & ~(1u << b), 0u); // only the addressed bit may change
        ASSERT_EQ(mem.read(oracle::alias_of(byte, b), 1).value, (after >> b) & 1u);
    }
}

TEST(MemoryProperty, EightAliasWritesRebuildAByte) {
    MemorySystem mem(default_memory_config());
    for (unsigned pattern = 0; pattern < 256; ++pattern) {
        const Address byte = 0x20000200u + pattern;
        mem.poke(byte, 1, ~pattern & 0xFF);
        for (unsigned b = 0; b < 8; ++b) mem.write(oracle::alias_of(byte, b), 1, (pattern >> b) & 1u);
        ASSERT_EQ(*mem.peek(byte, 1), pattern);
        for (unsigned b = 0; b < 8; ++b) ASSERT_EQ(mem.read(oracle::alias_of(byte, b), 1).value, (pattern >> b) & 1u);
    }
}

TEST(MemoryProperty, AliasGeometryIsEightToOne) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t target_len = 1 + rng() % (1u << 20);
        RegionDescriptor t{"t", 0x20000000, target_len, RegionKind::BitbandTarget, true, true, false, 0, ""};
        RegionDescriptor a{"a", 0x22000000, 8 * target_len, RegionKind::BitbandAlias, true, false, false, 0, "t"};
        ASSERT_NO_THROW(MemoryMap({t, a}));
        a.length = 8 * target_len + 1 + rng() % 64;
        ASSERT_THROW(MemoryMap({t, a}), ConfigError);
    }
    const MemoryMap def(default_memory_config().regions);
    for (const auto& r : def.regions()) {
        if (r.kind != RegionKind::BitbandAlias) continue;
        EXPECT_EQ(r.length, 8 * def.by_name(r.alias_of)->length);
    }
}

TEST(MemoryProperty, StraightLineFlashFetchCostsOneNonsequentialThenSequential) {
    for (unsigned n = 1; n <= 64; n += 7) {
        std::ostringstream src;
        src << "start:\n";
        for (unsigned i = 0; i < n; ++i) src << " add r1, r1, #1\n";
        src << " halt\n";
        auto s = t2test::run(src.str());
        ASSERT_EQ(s->sim().status(), RunStatus::Halted);
        const FlashTiming t{};
        const unsigned count = n + 1;
        // base cost 1 per instruction, one stream start, then sequential beats
        EXPECT_EQ(s->sim().now(), count + t.nonsequential_cycles + (count - 1) * t.sequential_cycles);
        EXPECT_EQ(s->sim().counters().fetch_nonseq, 1u);
    }
}

TEST(MemoryProperty, TakenBranchAddsExactlyOneRestart) {
    const auto straight = t2test::run("start:\n add r1, r1, #1\n add r1, r1, #1\n add r1, r1, #1\n halt\n");
    const auto jumped = t2test::run("start:\n add r1, r1, #1\n b next\n .space 64\nnext:\n add r1, r1, #1\n halt\n");
    const FlashTiming t{};
    // same instruction count; the branch costs a refill plus one stream restart
    EXPECT_EQ(jumped->sim().now() - straight->sim().now(), 2 + (t.nonsequential_cycles - t.sequential_cycles));
}

TEST(MemoryProperty, LdmTouchesOnlyTheLinesItSpans) {
    for (unsigned words = 1; words <= 10; ++words) {
        for (unsigned start_word = 0; start_word < 8; ++start_word) {
            const Address base = 0x20000400u + 4 * start_word;
            std::ostringstream src;
            src << ".org 0x100\nstart:\n ldr r0, =" << base << "\n ldm r0, {r1";
            if (words > 1) src << "-r" << words;
            src << "}\n halt\n";
            auto cfg = t2test::config_for(src.str());
            for (auto& r : cfg.sim.memory.regions) {
                if (r.name == "sram") r.cached = true;
            }
            cfg.sim.memory.dcache.enabled = true;
            harness::Session s(cfg);
            s.run();
            ASSERT_EQ(s.sim().status(), RunStatus::Halted);
            const unsigned expected = oracle::lines_touched(base, words);
            ASSERT_EQ(s.sim().counters().dcache_fills, expected) << words << " words from word " << start_word;
            if (start_word == 0 && words <= 8) ASSERT_EQ(expected, 1u);
            if (words == 10) ASSERT_TRUE(expected == 2 || expected == 3);
        }
    }
}
