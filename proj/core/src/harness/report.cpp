#include "t2sim/harness/report.hpp"

#include <cstdio>

#include "t2sim/harness/config.hpp"

namespace t2sim::harness {

using nlohmann::json;

std::string hex32(Word v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

json trace_record_json(const TraceRecord& rec) {
    json j;
    j["cycle"] = rec.cycle;
    j["pc"] = hex32(rec.pc);
    j["event"] = to_string(rec.kind);
    j["cost"] = rec.cost;
    json detail = json::object();
    for (const auto& f : rec.detail) {
        if (const auto* i = std::get_if<std::int64_t>(&f.value)) {
            detail[f.key] = *i;
        } else {
            detail[f.key] = std::get<std::string>(f.value);
        }
    }
    j["detail"] = std::move(detail);
    return j;
}

std::string trace_ndjson(const std::vector<TraceRecord>& trace) {
    std::string out;
    for (const auto& rec : trace) {
        out += trace_record_json(rec).dump();
        out += '\n';
    }
    return out;
}

json counters_json(const Counters& c) {
    json j = json::object();
    for (const auto& name : counter_names()) j[name] = *counter_by_name(c, name);
    return j;
}

json registers_json(const isa::MachineState& s) {
    json j = json::object();
    for (unsigned r = 0; r < kRegCount; ++r) j["r" + std::to_string(r)] = hex32(s.regs[r]);
    j["flags"] = {{"n", s.flags.n}, {"z", s.flags.z}, {"c", s.flags.c}, {"v", s.flags.v}};
    j["privileged"] = s.privileged;
    return j;
}

json fault_json(const Fault& f) {
    return {{"kind", to_string(f.kind)},
            {"address", hex32(f.address)},
            {"pc", hex32(f.pc)},
            {"access", to_string(f.access)},
            {"cycle", f.cycle}};
}

json code_size_json(const assembler::CodeSizeReport& r) {
    return {{"count16", r.count16},         {"count32", r.count32},     {"instruction_bytes", r.instruction_bytes},
            {"pool_bytes", r.pool_bytes},   {"data_bytes", r.data_bytes}, {"total_bytes", r.total_bytes},
            {"all32_bytes", r.all32_bytes}, {"ratio", r.ratio}};
}

json image_sidecar_json(const assembler::ProgramImage& image) {
    json j;
    j["mode"] = std::string(assembler::to_string(image.mode));
    j["entry"] = hex32(image.entry);
    json segs = json::array();
    for (const auto& s : image.segments) segs.push_back({{"base", hex32(s.base)}, {"bytes", s.bytes.size()}});
    j["segments"] = std::move(segs);
    json syms = json::object();
    for (const auto& [name, addr] : image.symbols) syms[name] = hex32(addr);
    j["symbols"] = std::move(syms);
    json insns = json::array();
    for (const auto& rec : image.instructions) {
        json i = {{"address", hex32(rec.address)},
                  {"width_bits", rec.insn.width_bits},
                  {"text", isa::disassemble(rec.insn)},
                  {"line", rec.line}};
        if (rec.target) i["target"] = *rec.target;
        insns.push_back(std::move(i));
    }
    j["instructions"] = std::move(insns);
    json pools = json::array();
    for (const auto& p : image.pools) {
        json entries = json::array();
        for (const auto& e : p.entries) entries.push_back({{"address", hex32(e.address)}, {"value", hex32(e.value)}, {"key", e.key}});
        pools.push_back({{"address", hex32(p.address)}, {"bytes", p.bytes}, {"entries", std::move(entries)}});
    }
    j["pools"] = std::move(pools);
    j["code_size"] = code_size_json(assembler::code_size_report(image));
    return j;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

} // namespace t2sim::harness
