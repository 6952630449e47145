#include <gtest/gtest.h>

#include "t2sim/mpu/mpu.hpp"

using namespace t2sim;
using namespace t2sim::mpu;

namespace {

MpuRegion rw_region(Address base, std::uint64_t size, unsigned unpriv_bits = 3, unsigned priv_bits = 7) {
    MpuRegion r;
    r.base = base;
    r.size = size;
    r.privileged = Perms::from_bits(priv_bits);
    r.unprivileged = Perms::from_bits(unpriv_bits);
    r.enabled = true;
    return r;
}

} // namespace

static_assert(kMinRegionSize == 32);
static_assert(kMinRegionSize < 4096, "regions must be finer than a 4 KiB page");
static_assert(kRegionCount == 8);

TEST(Mpu, InsideRegionAllowedOnePastEndFaults) {
    MpuConfig cfg;
    cfg.enabled = true;
    cfg.regions[0] = rw_region(0x20000000, 64);
    EXPECT_TRUE(check_access(cfg, 0x2000003C, 4, AccessKind::Write, false).allowed());
    const auto past = check_access(cfg, 0x20000040, 4, AccessKind::Write, false);
    EXPECT_EQ(past.decision, Decision::NoRegion);
}

TEST(Mpu, AdjacentTaskRegions) {
    MpuConfig cfg;
    cfg.enabled = true;
    cfg.regions[1] = rw_region(0x20002000, 128);
    EXPECT_TRUE(check_access(cfg, 0x20002000, 4, AccessKind::Write, false).allowed());
    EXPECT_TRUE(check_access(cfg, 0x2000207C, 4, AccessKind::Write, false).allowed());
    EXPECT_FALSE(check_access(cfg, 0x20002080, 4, AccessKind::Write, false).allowed());
}

TEST(Mpu, PermissionDeniedNamesRegion) {
    MpuConfig cfg;
    cfg.enabled = true;
    cfg.regions[2] = rw_region(0x20000000, 256, 1);
    EXPECT_TRUE(check_access(cfg, 0x20000000, 4, AccessKind::Read, false).allowed());
    const auto w = check_access(cfg, 0x20000000, 4, AccessKind::Write, false);
    EXPECT_EQ(w.decision, Decision::PermDenied);
    EXPECT_EQ(w.region, 2u);
    EXPECT_EQ(check_access(cfg, 0x20000000, 2, AccessKind::Execute, false).decision, Decision::PermDenied);
}

TEST(Mpu, HigherIndexWins) {
    MpuConfig cfg;
    cfg.enabled = true;
    cfg.regions[0] = rw_region(0x20000000, 1024, 3);
    cfg.regions[5] = rw_region(0x20000100, 256, 0);
    EXPECT_EQ(check_access(cfg, 0x20000100, 4, AccessKind::Read, false).region, 5u);
    EXPECT_FALSE(check_access(cfg, 0x20000100, 4, AccessKind::Read, false).allowed());
    EXPECT_TRUE(check_access(cfg, 0x20000000, 4, AccessKind::Read, false).allowed());
}

TEST(Mpu, BackgroundOnlyForPrivileged) {
    MpuConfig cfg;
    cfg.enabled = true;
    EXPECT_TRUE(check_access(cfg, 0x30000000, 4, AccessKind::Read, true).allowed());
    EXPECT_FALSE(check_access(cfg, 0x30000000, 4, AccessKind::Read, false).allowed());
    cfg.background_privileged_allowed = false;
    EXPECT_FALSE(check_access(cfg, 0x30000000, 4, AccessKind::Read, true).allowed());
}

TEST(Mpu, DisabledAllowsEverything) {
    MpuConfig cfg;
    cfg.regions[0] = rw_region(0x20000000, 32, 0, 0);
    EXPECT_TRUE(check_access(cfg, 0x20000000, 4, AccessKind::Write, false).allowed());
}

TEST(Mpu, ConfigureValidMinimalRegion) {
    MpuConfig cfg;
    EXPECT_EQ(configure_region(cfg, 0, rw_region(0x20000020, 32), true), ConfigureOutcome::Ok);
    EXPECT_EQ(cfg.regions[0].size, 32u);
}

TEST(Mpu, ConfigureRejectsBadGeometry) {
    MpuConfig cfg;
    EXPECT_THROW(configure_region(cfg, 0, rw_region(0x20000010, 32), true), ConfigError);
    EXPECT_THROW(configure_region(cfg, 0, rw_region(0x20000000, 48), true), ConfigError);
    EXPECT_THROW(configure_region(cfg, 0, rw_region(0x20000000, 16), true), ConfigError);
    EXPECT_THROW(configure_region(cfg, 8, rw_region(0x20000000, 32), true), ConfigError);
    EXPECT_NO_THROW(validate_region(rw_region(0, 1ull << 32)));
}

TEST(Mpu, UnprivilegedConfigureRefusedWithoutChange) {
    MpuConfig cfg;
    const auto before = cfg.regions[3];
    EXPECT_EQ(configure_region(cfg, 3, rw_region(0x20000000, 64), false), ConfigureOutcome::PermDenied);
    EXPECT_EQ(cfg.regions[3], before);
}
