#pragma once

#include <string>

namespace smacs::sim {

struct ContractInstance;

/// Installs the named fixture's method table on the instance, reading wiring
/// parameters from instance.init. Throws UnknownFixture.
void build_fixture(const std::string& name, ContractInstance& inst);

}  // namespace smacs::sim
