#include "sdcg/oracle.hpp"

namespace sdcg {

namespace {

std::shared_ptr<OracleHandle> make_handle(const std::string& spec, const std::string& record) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw OracleError("bad oracle spec '" + spec + "' (expected kind:arg)");
  const auto kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "table") return TableOracle::load(arg, TableOracle::Fallback::error);
  if (kind == "table-or-uniform") return TableOracle::load(arg, TableOracle::Fallback::uniform);
  if (kind == "replay") return ReplayOracle::load(arg);
  if (kind == "uniform") return std::make_shared<TableOracle>(TableOracle::Fallback::uniform);
  if (kind == "remote") {
    RemoteConfig cfg;
    cfg.base_url = arg;
    if (!record.empty()) cfg.record_to = record;
    return std::make_shared<RemoteOracle>(cfg);
  }
  throw OracleError("unknown oracle kind '" + kind + "' in '" + spec + "'");
}

}  // namespace

OracleRegistry registry_from_specs(std::span<const std::string> specs, const std::string& record) {
  OracleRegistry reg;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    const auto colon = spec.find(':');
    // "id=kind:arg"; an '=' inside the argument (a URL query, say) does not count
    if (eq != std::string::npos && (colon == std::string::npos || eq < colon))
      reg.add(spec.substr(0, eq), make_handle(spec.substr(eq + 1), record));
    else
      reg.set_fallback(make_handle(spec, record));
  }
  return reg;
}

}  // namespace sdcg
