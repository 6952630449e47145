#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "t2sim/memory/memory_system.hpp"

using namespace t2sim;
using namespace t2sim::memory;

namespace {

RegionDescriptor region(std::string name, Address base, std::uint64_t length, RegionKind kind, std::string alias_of = "") {
    RegionDescriptor r;
    r.name = std::move(name);
    r.base = base;
    r.length = length;
    r.kind = kind;
    r.alias_of = std::move(alias_of);
    return r;
}

MemoryConfig cached_sram() {
    auto cfg = default_memory_config();
    for (auto& r : cfg.regions) {
        if (r.name == "sram") r.cached = true;
    }
    cfg.dcache.enabled = true;
    return cfg;
}

} // namespace

TEST(MemoryMap, DefaultMapGeometry) {
    const MemoryMap map(default_memory_config().regions);
    const auto* sram = map.by_name("sram");
    const auto* alias = map.by_name("sram_alias");
    ASSERT_TRUE(sram && alias);
    EXPECT_EQ(alias->length, 8 * sram->length);
    EXPECT_EQ(map.region_at(0x20000000)->name, "sram");
    EXPECT_EQ(map.region_at(0x0)->name, "flash");
    EXPECT_FALSE(map.find(0x30000000));
}

TEST(MemoryMap, RejectsOverlap) {
    std::vector<RegionDescriptor> rs{region("a", 0x1000, 0x1000, RegionKind::Ram), region("b", 0x1800, 0x1000, RegionKind::Ram)};
    EXPECT_THROW(MemoryMap{rs}, ConfigError);
}

TEST(MemoryMap, RejectsAliasOfWrongLength) {
    std::vector<RegionDescriptor> rs{region("t", 0x20000000, 0x100, RegionKind::BitbandTarget),
                                     region("a", 0x22000000, 0x400, RegionKind::BitbandAlias, "t")};
    EXPECT_THROW(MemoryMap{rs}, ConfigError);
}

TEST(MemoryMap, RejectsOversizedBitbandTarget) {
    std::vector<RegionDescriptor> rs{region("t", 0x20000000, 2u << 20, RegionKind::BitbandTarget),
                                     region("a", 0x22000000, 16u << 20, RegionKind::BitbandAlias, "t")};
    EXPECT_THROW(MemoryMap{rs}, ConfigError);
}

TEST(MemoryMap, RejectsUnpairedAlias) {
    std::vector<RegionDescriptor> rs{region("a", 0x22000000, 0x400, RegionKind::BitbandAlias, "missing")};
    EXPECT_THROW(MemoryMap{rs}, ConfigError);
}

TEST(Bitband, TranslatesByteAndBit) {
    const MemoryMap map(default_memory_config().regions);
    const auto loc = map.translate_bitband(0x22000000 + 8 * 0x100 + 3);
    ASSERT_TRUE(loc);
    EXPECT_EQ(loc->target_byte, 0x20000100u);
    EXPECT_EQ(loc->bit, 3u);
    EXPECT_FALSE(map.translate_bitband(0x20000000));
}

TEST(Bitband, WriteSetsOneBitAndReadsItBack) {
    MemorySystem mem(default_memory_config());
    ASSERT_TRUE(mem.poke(0x20000010, 1, 0x81));
    const Address a = oracle::alias_of(0x20000010, 4);
    EXPECT_EQ(mem.write(a, 1, 1).fault, MemFault::None);
    EXPECT_EQ(*mem.peek(0x20000010, 1), 0x91u);
    EXPECT_EQ(mem.read(a, 1).value, 1u);
    mem.write(oracle::alias_of(0x20000010, 7), 1, 0xFE); // only bit 0 of the value counts
    EXPECT_EQ(*mem.peek(0x20000010, 1), 0x11u);
    EXPECT_EQ(mem.read(oracle::alias_of(0x20000010, 7), 1).value, 0u);
}

TEST(Flash, SequentialStreamAndRestart) {
    FlashStream f(FlashTiming{1, 4, 4, false});
    EXPECT_EQ(f.fetch(0x100, 2).cycles, 4u);
    EXPECT_TRUE(f.fetch(0x100 + 2, 2).cycles == 1);
    EXPECT_EQ(f.fetch(0x104, 4).cycles, 1u);
    const auto far = f.data_read(0x800, 4);
    EXPECT_TRUE(far.nonsequential);
    EXPECT_EQ(far.cycles, 4u);
    EXPECT_EQ(f.fetch(0x108, 2).cycles, 4u);
}

TEST(Flash, SplitDataPortKeepsStream) {
    FlashStream f(FlashTiming{1, 4, 4, true});
    f.fetch(0x100, 2);
    EXPECT_EQ(f.data_read(0x800, 4).cycles, 4u);
    EXPECT_EQ(f.fetch(0x102, 2).cycles, 1u);
}

TEST(Flash, RejectsInconsistentTiming) {
    EXPECT_THROW(FlashStream(FlashTiming{0, 4, 4, false}), ConfigError);
    EXPECT_THROW(FlashStream(FlashTiming{5, 4, 4, false}), ConfigError);
    EXPECT_THROW(FlashStream(FlashTiming{1, 4, 3, false}), ConfigError);
}

TEST(Dcache, MissFillsThenHits) {
    MemorySystem mem(cached_sram());
    mem.poke(0x20000040, 4, 0xAABBCCDD);
    const auto miss = mem.read(0x20000040, 4);
    EXPECT_EQ(miss.value, 0xAABBCCDDu);
    EXPECT_TRUE(miss.filled_line);
    EXPECT_EQ(miss.cycles, 12u);
    const auto hit = mem.read(0x20000044, 4);
    EXPECT_FALSE(hit.filled_line);
    EXPECT_EQ(hit.cycles, 0u);
}

TEST(Dcache, WriteThroughUpdatesBacking) {
    MemorySystem mem(cached_sram());
    mem.read(0x20000040, 4);
    mem.write(0x20000040, 4, 0x12345678);
    EXPECT_EQ(*mem.peek(0x20000040, 4), 0x12345678u);
    EXPECT_EQ(mem.read(0x20000040, 4).value, 0x12345678u);
}

TEST(Dcache, InjectedFlipAbortsAtThatWord) {
    MemorySystem mem(cached_sram());
    mem.read(0x20000040, 4);
    SoftErrorInjection inj;
    inj.target = SoftErrorTarget::DcacheData;
    inj.word = 3;
    inj.bit = 17;
    const auto out = mem.inject(inj);
    ASSERT_TRUE(out.applied);
    EXPECT_EQ(out.address, 0x2000004Cu);
    EXPECT_EQ(mem.read(0x20000048, 4).fault, MemFault::None);
    EXPECT_EQ(mem.read(0x2000004C, 4).fault, MemFault::DcacheParity);
}

TEST(Dcache, TagFlipBecomesAMiss) {
    MemorySystem mem(cached_sram());
    mem.poke(0x20000040, 4, 7);
    mem.read(0x20000040, 4);
    SoftErrorInjection inj;
    inj.target = SoftErrorTarget::DcacheTag;
    ASSERT_TRUE(mem.inject(inj).applied);
    const auto r = mem.read(0x20000040, 4);
    EXPECT_EQ(r.fault, MemFault::None);
    EXPECT_TRUE(r.filled_line);
    EXPECT_EQ(r.value, 7u);
}

TEST(Tcm, FlipIsRepairedWithStall) {
    MemorySystem mem(default_memory_config());
    mem.load(0x10000000, std::vector<std::uint8_t>{1, 2, 3, 4});
    SoftErrorInjection inj;
    inj.target = SoftErrorTarget::Tcm;
    inj.word = 0;
    inj.bit = 9;
    ASSERT_TRUE(mem.inject(inj).applied);
    const auto r = mem.read(0x10000000, 4);
    EXPECT_EQ(r.fault, MemFault::None);
    EXPECT_EQ(r.value, 0x04030201u);
    EXPECT_EQ(r.cycles, 4u);
    EXPECT_EQ(mem.read(0x10000000, 4).cycles, 0u);
}

TEST(Injection, WarnsWhenCacheDisabled) {
    MemorySystem mem(default_memory_config());
    SoftErrorInjection inj;
    inj.target = SoftErrorTarget::IcacheData;
    const auto out = mem.inject(inj);
    EXPECT_FALSE(out.applied);
    EXPECT_FALSE(out.warning.empty());
}

TEST(Campaign, SeedReplaysIdentically) {
    const auto a = generate_campaign(42, 50, SoftErrorTarget::Tcm, 32);
    const auto b = generate_campaign(42, 50, SoftErrorTarget::Tcm, 32);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].word, b[i].word);
        EXPECT_EQ(a[i].bit, b[i].bit);
        EXPECT_EQ(a[i].pick, b[i].pick);
        EXPECT_LT(a[i].word, 32u);
    }
}

TEST(Fpb, EightEntriesAnywhereNinthRejected) {
    MemorySystem mem(default_memory_config());
    for (unsigned i = 0; i < kFpbEntries; ++i) mem.fpb_configure(i, FpbEntry{0x100 + 4 * i, FpbMode::Breakpoint, 0});
    EXPECT_EQ(mem.fpb().enabled_count(), 8u);
    EXPECT_THROW(mem.fpb_configure(8, FpbEntry{0x200, FpbMode::Breakpoint, 0}), ConfigError);
    for (unsigned i = 0; i < kFpbEntries; ++i) EXPECT_TRUE(mem.fetch(0x100 + 4 * i).breakpoint);
    EXPECT_FALSE(mem.fetch(0x120).breakpoint);
}

TEST(Fpb, RejectsMisalignedDuplicateOrNonFlash) {
    MemorySystem mem(default_memory_config());
    EXPECT_THROW(mem.fpb_configure(0, FpbEntry{0x102, FpbMode::Breakpoint, 0}), ConfigError);
    EXPECT_THROW(mem.fpb_configure(0, FpbEntry{0x20000000, FpbMode::Breakpoint, 0}), ConfigError);
    mem.fpb_configure(0, FpbEntry{0x100, FpbMode::Breakpoint, 0});
    EXPECT_THROW(mem.fpb_configure(1, FpbEntry{0x100, FpbMode::Remap, 0}), ConfigError);
}

TEST(Fpb, RemapSubstitutesFetchedWord) {
    MemorySystem mem(default_memory_config());
    mem.poke(0x100, 4, 0x11112222);
    mem.fpb_configure(0, FpbEntry{0x100, FpbMode::Remap, 0x33334444});
    const auto f = mem.fetch(0x100, false);
    EXPECT_EQ(f.halfwords[0], 0x4444u);
    EXPECT_EQ(*mem.peek(0x100, 4), 0x11112222u); // storage untouched
}

TEST(Memory, UnmappedAndReadOnlyAccessesFault) {
    MemorySystem mem(default_memory_config());
    EXPECT_EQ(mem.read(0x30000000, 4).fault, MemFault::Bus);
    EXPECT_EQ(mem.write(0x100, 4, 1).fault, MemFault::Bus);
    EXPECT_EQ(mem.fetch(0x30000000).fault, MemFault::Bus);
}
