#pragma once

namespace riskplan {

/// Entry point behind the `riskplan` binary: verbs train, eval, sweep,
/// inspect-model; flags --config, --seed, --out, --override key=value.
/// Returns 0 on success, 1 on numeric failure, 2 on invalid config or input.
int cli_main(int argc, const char* const* argv);

}  // namespace riskplan
