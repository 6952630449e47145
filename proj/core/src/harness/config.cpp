#include "t2sim/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace t2sim::harness {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + message);
}

std::optional<std::uint64_t> parse_uint_text(std::string_view s) {
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
        base = 2;
        s.remove_prefix(2);
    }
    std::string digits;
    for (char c : s) {
        if (c != '_') digits.push_back(c);
    }
    if (digits.empty()) return std::nullopt;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
    if (ec != std::errc{} || p != digits.data() + digits.size()) return std::nullopt;
    return v;
}

// A JSON value plus the dotted path that reached it.
class Node {
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return *j_; }

    std::string child_path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    void expect_object() const {
        if (!j_->is_object()) fail(path_, "expected an object");
    }

    void only(std::initializer_list<std::string_view> keys) const {
        expect_object();
        for (const auto& [k, v] : j_->items()) {
            bool known = false;
            for (auto allowed : keys) known = known || k == allowed;
            if (!known) fail(child_path(k), "unknown field");
        }
    }

    bool has(std::string_view key) const { return j_->is_object() && j_->contains(std::string(key)); }

    std::optional<Node> get(std::string_view key) const {
        if (!has(key)) return std::nullopt;
        return Node(j_->at(std::string(key)), child_path(key));
    }

    Node at(std::string_view key) const {
        if (!has(key)) fail(child_path(key), "required field is missing");
        return Node(j_->at(std::string(key)), child_path(key));
    }

    std::vector<Node> array() const {
        if (!j_->is_array()) fail(path_, "expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back((*j_)[i], path_ + "[" + std::to_string(i) + "]");
        return out;
    }

    std::uint64_t u64(std::uint64_t max = UINT64_MAX) const {
        std::optional<std::uint64_t> v;
        if (j_->is_number_unsigned()) {
            v = j_->get<std::uint64_t>();
        } else if (j_->is_number_integer()) {
            if (j_->get<std::int64_t>() < 0) fail(path_, "must not be negative");
            v = static_cast<std::uint64_t>(j_->get<std::int64_t>());
        } else if (j_->is_string()) {
            v = parse_uint_text(j_->get<std::string>());
        }
        if (!v) fail(path_, "expected a non-negative integer (number or \"0x...\" string)");
        if (*v > max) fail(path_, "value " + std::to_string(*v) + " exceeds " + std::to_string(max));
        return *v;
    }

    std::uint32_t u32() const { return static_cast<std::uint32_t>(u64(0xFFFFFFFFull)); }

    bool boolean() const {
        if (!j_->is_boolean()) fail(path_, "expected true or false");
        return j_->get<bool>();
    }

    std::string str() const {
        if (!j_->is_string()) fail(path_, "expected a string");
        return j_->get<std::string>();
    }

    AddressRef address_ref() const {
        if (j_->is_string()) {
            const auto s = j_->get<std::string>();
            if (auto v = parse_uint_text(s)) {
                if (*v > 0xFFFFFFFFull) fail(path_, "address exceeds 32 bits");
                return {static_cast<Address>(*v), path_};
            }
            if (s.empty()) fail(path_, "empty label");
            return {s, path_};
        }
        return {u32(), path_};
    }

private:
    const json* j_;
    std::string path_;
};

template <typename T>
void opt_u(const Node& n, std::string_view key, T& out, std::uint64_t max = UINT64_MAX) {
    if (auto c = n.get(key)) out = static_cast<T>(c->u64(max));
}

void opt_b(const Node& n, std::string_view key, bool& out) {
    if (auto c = n.get(key)) out = c->boolean();
}

mpu::Perms parse_perms(const Node& n) {
    const auto s = n.str();
    mpu::Perms p;
    for (char c : s) {
        switch (c) {
        case 'r': p.read = true; break;
        case 'w': p.write = true; break;
        case 'x': p.execute = true; break;
        case '-': break;
        default: fail(n.path(), "permissions are a combination of 'r', 'w', 'x' (or \"-\")");
        }
    }
    return p;
}

memory::RegionDescriptor parse_region(const Node& n) {
    n.only({"name", "base", "length", "kind", "writable", "executable", "cached", "access_cycles", "alias_of"});
    memory::RegionDescriptor r;
    r.name = n.at("name").str();
    r.base = n.at("base").u32();
    r.length = n.at("length").u64(1ull << 32);
    const auto kind_node = n.at("kind");
    auto kind = memory::parse_region_kind(kind_node.str());
    if (!kind) fail(kind_node.path(), "unknown region kind (flash, ram, tcm, bitband_target, bitband_alias, device)");
    r.kind = *kind;
    r.writable = r.kind != memory::RegionKind::Flash;
    r.executable = r.kind != memory::RegionKind::Device && r.kind != memory::RegionKind::BitbandAlias;
    opt_b(n, "writable", r.writable);
    opt_b(n, "executable", r.executable);
    opt_b(n, "cached", r.cached);
    opt_u(n, "access_cycles", r.access_cycles, 1'000'000);
    if (auto a = n.get("alias_of")) r.alias_of = a->str();
    if (r.kind == memory::RegionKind::BitbandAlias && r.alias_of.empty()) fail(n.path(), "bitband_alias needs alias_of");
    return r;
}

memory::CacheConfig parse_cache(const Node& n, memory::CacheConfig c) {
    n.only({"enabled", "line_count", "fill_cycles_per_line", "hit_cycles"});
    opt_b(n, "enabled", c.enabled);
    opt_u(n, "line_count", c.line_count, 1u << 20);
    opt_u(n, "fill_cycles_per_line", c.fill_cycles_per_line, 1'000'000);
    opt_u(n, "hit_cycles", c.hit_cycles, 1'000'000);
    if (c.line_count == 0 || (c.line_count & (c.line_count - 1)) != 0) {
        fail(n.child_path("line_count"), "must be a power of two");
    }
    return c;
}

void parse_memory(const Node& n, memory::MemoryConfig& m) {
    n.only({"regions", "flash", "icache", "dcache", "tcm_repair_stall_cycles"});
    if (auto r = n.get("regions")) {
        m.regions.clear();
        for (const auto& e : r->array()) m.regions.push_back(parse_region(e));
    }
    if (auto f = n.get("flash")) {
        f->only({"sequential_cycles", "nonsequential_cycles", "fetch_width", "split_data_port"});
        opt_u(*f, "sequential_cycles", m.flash.sequential_cycles, 1'000'000);
        opt_u(*f, "nonsequential_cycles", m.flash.nonsequential_cycles, 1'000'000);
        opt_u(*f, "fetch_width", m.flash.fetch_width, 64);
        opt_b(*f, "split_data_port", m.flash.split_data_port);
        if (m.flash.sequential_cycles < 1) fail(f->child_path("sequential_cycles"), "must be >= 1");
        if (m.flash.nonsequential_cycles < m.flash.sequential_cycles) {
            fail(f->child_path("nonsequential_cycles"), "must be >= sequential_cycles");
        }
        if (m.flash.fetch_width == 0 || m.flash.fetch_width % 2 != 0) {
            fail(f->child_path("fetch_width"), "must be a positive even number of bytes");
        }
    }
    if (auto c = n.get("icache")) m.icache = parse_cache(*c, m.icache);
    if (auto c = n.get("dcache")) m.dcache = parse_cache(*c, m.dcache);
    opt_u(n, "tcm_repair_stall_cycles", m.tcm_repair_stall_cycles, 1'000'000);
}

void parse_mpu(const Node& n, mpu::MpuConfig& cfg) {
    n.only({"enabled", "background_privileged_allowed", "regions"});
    opt_b(n, "enabled", cfg.enabled);
    opt_b(n, "background_privileged_allowed", cfg.background_privileged_allowed);
    if (auto rs = n.get("regions")) {
        for (const auto& e : rs->array()) {
            e.only({"index", "base", "size", "privileged", "unprivileged", "enabled"});
            const auto index_node = e.at("index");
            const auto index = static_cast<unsigned>(index_node.u64());
            if (index >= mpu::kRegionCount) fail(index_node.path(), "region index must be 0..7");
            mpu::MpuRegion r;
            r.base = e.at("base").u32();
            r.size = e.at("size").u64(mpu::kMaxRegionSize);
            if (auto p = e.get("privileged")) r.privileged = parse_perms(*p);
            if (auto p = e.get("unprivileged")) r.unprivileged = parse_perms(*p);
            r.enabled = true;
            opt_b(e, "enabled", r.enabled);
            try {
                mpu::validate_region(r);
            } catch (const ConfigError& err) {
                fail(e.path(), err.what());
            }
            cfg.regions[index] = r;
        }
    }
}

void parse_nvic(const Node& n, RunConfig& cfg) {
    n.only({"lines", "stimulus", "costs", "vector_table_base"});
    if (auto c = n.get("costs")) {
        c->only({"stacking", "unstack", "tailchain", "refill"});
        auto& k = cfg.sim.nvic_costs;
        opt_u(*c, "stacking", k.stacking, 1'000'000);
        opt_u(*c, "unstack", k.unstack, 1'000'000);
        opt_u(*c, "tailchain", k.tailchain, 1'000'000);
        opt_u(*c, "refill", k.refill, 1'000'000);
    }
    if (auto v = n.get("vector_table_base")) cfg.sim.cpu.vector_table_base = v->u32();
    if (auto ls = n.get("lines")) {
        for (const auto& e : ls->array()) {
            e.only({"id", "priority", "enabled", "nmi", "handler"});
            LineSpec spec;
            spec.line.id = static_cast<unsigned>(e.at("id").u64(255));
            spec.line.priority = static_cast<std::uint8_t>(e.get("priority") ? e.at("priority").u64(255) : 0);
            spec.line.enabled = true;
            opt_b(e, "enabled", spec.line.enabled);
            opt_b(e, "nmi", spec.line.nmi);
            if (auto h = e.get("handler")) spec.handler = h->address_ref();
            for (const auto& other : cfg.lines) {
                if (other.line.id == spec.line.id) fail(e.path(), "duplicate line id " + std::to_string(spec.line.id));
            }
            cfg.lines.push_back(spec);
        }
    }
    if (auto st = n.get("stimulus")) {
        for (const auto& e : st->array()) {
            e.only({"cycle", "line"});
            Stimulus s;
            s.cycle = e.at("cycle").u64();
            const auto line_node = e.at("line");
            s.line = static_cast<unsigned>(line_node.u64(255));
            bool known = false;
            for (const auto& l : cfg.lines) known = known || l.line.id == s.line;
            if (!known) fail(line_node.path(), "stimulus names undefined line " + std::to_string(s.line));
            cfg.stimuli.push_back(s);
        }
    }
}

memory::SoftErrorTarget parse_target(const Node& n) {
    auto t = memory::parse_soft_error_target(n.str());
    if (!t) fail(n.path(), "unknown soft-error target (icache_data, icache_tag, dcache_data, dcache_tag, tcm)");
    return *t;
}

void parse_trigger(const Node& e, std::optional<Cycles>& at_cycle, std::optional<AddressRef>& at_pc,
                   unsigned& occurrence) {
    if (auto c = e.get("at_cycle")) at_cycle = c->u64();
    if (auto p = e.get("at_pc")) at_pc = p->address_ref();
    if (auto o = e.get("occurrence")) occurrence = static_cast<unsigned>(o->u64(1u << 30));
    if (occurrence == 0) fail(e.child_path("occurrence"), "must be >= 1");
    if (!at_cycle && !at_pc) fail(e.path(), "needs at_cycle or at_pc");
}

void parse_soft_errors(const Node& n, RunConfig& cfg) {
    n.only({"injections", "campaign"});
    if (auto is = n.get("injections")) {
        for (const auto& e : is->array()) {
            e.only({"target", "line", "word", "bit", "pick", "tcm_region", "at_cycle", "at_pc", "occurrence"});
            InjectionSpec s;
            s.injection.target = parse_target(e.at("target"));
            if (auto l = e.get("line")) s.injection.line = static_cast<unsigned>(l->u64(1u << 20));
            opt_u(e, "word", s.injection.word, 1u << 28);
            opt_u(e, "bit", s.injection.bit, 31);
            opt_u(e, "pick", s.injection.pick, 0xFFFFFFFFu);
            if (auto r = e.get("tcm_region")) s.injection.tcm_region = r->str();
            parse_trigger(e, s.at_cycle, s.at_pc, s.occurrence);
            cfg.injections.push_back(s);
        }
    }
    if (auto c = n.get("campaign")) {
        c->only({"seed", "count", "target", "tcm_words", "at_cycle", "at_pc", "occurrence"});
        CampaignSpec s;
        s.seed = c->at("seed").u64();
        s.count = static_cast<unsigned>(c->at("count").u64(1'000'000));
        s.target = parse_target(c->at("target"));
        opt_u(*c, "tcm_words", s.tcm_words, 1u << 28);
        parse_trigger(*c, s.at_cycle, s.at_pc, s.occurrence);
        cfg.campaign = s;
    }
}

Assertion parse_assertion(const Node& n, const std::vector<std::string>& counters) {
    n.expect_object();
    Assertion a;
    a.path = n.path();
    int modes = 0;
    for (auto key : {"equals", "min", "max"}) {
        if (!n.has(key)) continue;
        ++modes;
        a.compare = std::string_view(key) == "equals" ? Compare::Equals
                    : std::string_view(key) == "min"  ? Compare::Min
                                                      : Compare::Max;
        const auto v = n.at(key);
        if (v.raw().is_number_integer() && v.raw().get<std::int64_t>() < 0) {
            a.value = v.raw().get<std::int64_t>();
        } else {
            a.value = static_cast<std::int64_t>(v.u64(0xFFFFFFFFFFFFull));
        }
    }
    if (n.has("reg")) {
        n.only({"reg", "equals", "min", "max"});
        a.kind = Assertion::Kind::Register;
        const auto r = n.at("reg");
        std::string name = r.str();
        for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (name == "sp") name = "r13";
        if (name == "lr") name = "r14";
        if (name == "pc") name = "r15";
        auto v = name.size() > 1 && name[0] == 'r' ? parse_uint_text(name.substr(1)) : std::nullopt;
        if (!v || *v > 15) fail(r.path(), "expected r0..r15, sp, lr or pc");
        a.reg = static_cast<unsigned>(*v);
    } else if (n.has("mem")) {
        n.only({"mem", "size", "equals", "min", "max"});
        a.kind = Assertion::Kind::Memory;
        a.address = n.at("mem").address_ref();
        opt_u(n, "size", a.size, 4);
        if (a.size != 1 && a.size != 2 && a.size != 4) fail(n.child_path("size"), "must be 1, 2 or 4");
    } else if (n.has("status")) {
        n.only({"status"});
        a.kind = Assertion::Kind::Status;
        a.name = n.at("status").str();
        bool known = false;
        for (auto s : {RunStatus::Halted, RunStatus::Breakpoint, RunStatus::Fault, RunStatus::Lockup, RunStatus::Timeout}) {
            known = known || a.name == to_string(s);
        }
        if (!known) fail(n.child_path("status"), "unknown status (halted, breakpoint, fault, lockup, timeout)");
        return a;
    } else if (n.has("counter")) {
        n.only({"counter", "equals", "min", "max"});
        a.kind = Assertion::Kind::Counter;
        a.name = n.at("counter").str();
        bool known = false;
        for (const auto& c : counters) known = known || c == a.name;
        if (!known) fail(n.child_path("counter"), "unknown counter '" + a.name + "'");
    } else if (n.has("cycles")) {
        n.only({"cycles", "equals", "min", "max"});
        a.kind = Assertion::Kind::Cycles;
        if (!n.at("cycles").boolean()) fail(n.child_path("cycles"), "must be true");
    } else if (n.has("faults")) {
        n.only({"faults", "equals", "min", "max"});
        a.kind = Assertion::Kind::Faults;
        if (!n.at("faults").boolean()) fail(n.child_path("faults"), "must be true");
    } else {
        fail(n.path(), "assertion needs one of reg, mem, status, counter, cycles, faults");
    }
    if (modes != 1) fail(n.path(), "assertion needs exactly one of equals, min, max");
    return a;
}

std::string read_file(const std::filesystem::path& p, const std::string& field) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(field, "cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::vector<std::string> counter_names() {
    return {"retired",          "skipped",          "fetch_nonseq",     "icache_misses",
            "icache_fills",     "icache_parity_invalidations",          "icache_tag_errors",
            "dcache_misses",    "dcache_fills",     "dcache_tag_errors", "stackings",
            "unstackings",      "tail_chains",      "aborts",           "repairs",
            "bitband_writes",   "mpu_faults",       "breakpoints",      "ldm_interrupted",
            "div_by_zero",      "soft_errors_injected",                 "warnings"};
}

std::optional<std::uint64_t> counter_by_name(const Counters& c, std::string_view name) {
    static const std::pair<std::string_view, std::uint64_t Counters::*> table[] = {
        {"retired", &Counters::retired},
        {"skipped", &Counters::skipped},
        {"fetch_nonseq", &Counters::fetch_nonseq},
        {"icache_misses", &Counters::icache_misses},
        {"icache_fills", &Counters::icache_fills},
        {"icache_parity_invalidations", &Counters::icache_parity_invalidations},
        {"icache_tag_errors", &Counters::icache_tag_errors},
        {"dcache_misses", &Counters::dcache_misses},
        {"dcache_fills", &Counters::dcache_fills},
        {"dcache_tag_errors", &Counters::dcache_tag_errors},
        {"stackings", &Counters::stackings},
        {"unstackings", &Counters::unstackings},
        {"tail_chains", &Counters::tail_chains},
        {"aborts", &Counters::aborts},
        {"repairs", &Counters::repairs},
        {"bitband_writes", &Counters::bitband_writes},
        {"mpu_faults", &Counters::mpu_faults},
        {"breakpoints", &Counters::breakpoints},
        {"ldm_interrupted", &Counters::ldm_interrupted},
        {"div_by_zero", &Counters::div_by_zero},
        {"soft_errors_injected", &Counters::soft_errors_injected},
        {"warnings", &Counters::warnings},
    };
    for (const auto& [n, field] : table) {
        if (n == name) return c.*field;
    }
    return std::nullopt;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    Node root(doc, "");
    root.only({"name", "cycle_limit", "memory", "programs", "images", "cpu", "mpu", "nvic", "fpb", "soft_errors",
               "assertions", "trace"});
    RunConfig cfg;
    if (auto n = root.get("name")) cfg.name = n->str();
    if (auto n = root.get("cycle_limit")) {
        cfg.cycle_limit = n->u64();
        if (cfg.cycle_limit == 0) fail(n->path(), "must be > 0");
    }
    if (auto n = root.get("trace")) cfg.sim.record_trace = n->boolean();
    if (auto n = root.get("memory")) parse_memory(*n, cfg.sim.memory);

    if (auto ps = root.get("programs")) {
        for (const auto& p : ps->array()) {
            p.only({"path", "source", "mode", "origin"});
            ProgramSpec spec;
            if (p.has("path") == p.has("source")) fail(p.path(), "give exactly one of path or source");
            if (auto path = p.get("path")) {
                const std::filesystem::path file = base_dir / path->str();
                spec.source = read_file(file, path->path());
                spec.origin_name = file.string();
            } else {
                spec.source = p.at("source").str();
                spec.origin_name = "<inline>";
            }
            if (auto m = p.get("mode")) {
                spec.mode = assembler::parse_load_mode(m->str());
                if (!spec.mode) fail(m->path(), "expected pool or movw");
            }
            if (auto o = p.get("origin")) spec.origin = o->u32();
            cfg.programs.push_back(std::move(spec));
        }
    }
    if (auto is = root.get("images")) {
        for (const auto& i : is->array()) {
            i.only({"path", "base"});
            ImageSpec spec;
            const auto path = i.at("path");
            const std::filesystem::path file = base_dir / path.str();
            const auto text = read_file(file, path.path());
            spec.bytes.assign(text.begin(), text.end());
            spec.base = i.at("base").u32();
            spec.origin_name = file.string();
            cfg.images.push_back(std::move(spec));
        }
    }
    if (cfg.programs.empty() && cfg.images.empty()) fail("programs", "a run needs at least one program or image");

    if (auto c = root.get("cpu")) {
        c->only({"entry", "initial_sp", "privileged", "ldm_interruptible", "branch_refill_cycles", "vector_table_base",
                 "data_abort_handler", "prefetch_abort_handler"});
        if (auto e = c->get("entry")) cfg.entry = e->address_ref();
        if (auto e = c->get("initial_sp")) cfg.sim.cpu.initial_sp = e->u32();
        opt_b(*c, "privileged", cfg.sim.cpu.privileged);
        opt_b(*c, "ldm_interruptible", cfg.sim.cpu.ldm_interruptible);
        opt_u(*c, "branch_refill_cycles", cfg.sim.cpu.branch_refill_cycles, 1'000'000);
        if (auto e = c->get("vector_table_base")) cfg.sim.cpu.vector_table_base = e->u32();
        if (auto e = c->get("data_abort_handler")) cfg.data_abort_handler = e->address_ref();
        if (auto e = c->get("prefetch_abort_handler")) cfg.prefetch_abort_handler = e->address_ref();
    }
    if (auto m = root.get("mpu")) parse_mpu(*m, cfg.sim.mpu);
    if (auto n = root.get("nvic")) parse_nvic(*n, cfg);
    if (auto f = root.get("fpb")) {
        for (const auto& e : f->array()) {
            e.only({"entry", "address", "mode", "value"});
            FpbSpec spec;
            const auto entry = e.at("entry");
            spec.entry = static_cast<unsigned>(entry.u64());
            if (spec.entry >= memory::kFpbEntries) fail(entry.path(), "the flash patch unit has 8 entries (0..7)");
            spec.address = e.at("address").address_ref();
            if (auto m = e.get("mode")) {
                const auto s = m->str();
                if (s == "breakpoint") {
                    spec.mode = memory::FpbMode::Breakpoint;
                } else if (s == "remap") {
                    spec.mode = memory::FpbMode::Remap;
                } else {
                    fail(m->path(), "expected breakpoint or remap");
                }
            }
            if (auto v = e.get("value")) spec.remap_value = v->u32();
            cfg.fpb.push_back(spec);
        }
    }
    if (auto s = root.get("soft_errors")) parse_soft_errors(*s, cfg);
    if (auto as = root.get("assertions")) {
        const auto names = counter_names();
        for (const auto& a : as->array()) cfg.assertions.push_back(parse_assertion(a, names));
    }
    return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open configuration");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

} // namespace t2sim::harness
