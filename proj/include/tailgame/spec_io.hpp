#pragma once

#include <string>

#include "tailgame/equilibrium.hpp"
#include "tailgame/game_core.hpp"
#include "tailgame/martin_d.hpp"

namespace tailgame {

// ---------------------------------------------------------------------------
// Game-spec files: JSON with fields n_players, actions (uniform list or one
// list per player), defaults, tail_default, eps (scalar or per player), and
// objectives (descriptor or one per player). Strict mode rejects unknown
// fields; lax mode warns on stderr. Numbers may be given as decimal strings.
// ---------------------------------------------------------------------------

/// Parse a spec document; diagnostics carry the JSON location when available.
GameSpec parse_spec_text(const std::string& text, bool strict = true);
GameSpec load_spec_file(const std::string& path, bool strict = true);

/// Certificate files: play, per-player audit rows, punishments, and meta.
/// Every floating-point number is serialized as a decimal string with 12
/// significant digits, so identical runs produce byte-identical files.
std::string certificate_to_json(const EquilibriumCertificate& cert,
                                const GameSpec& spec);
EquilibriumCertificate certificate_from_json(const std::string& text,
                                             const GameSpec& spec);

/// Auxiliary-run files (self-contained: moves as action indices).
std::string mrun_to_json(const MRun& run);
MRun mrun_from_json(const std::string& text);

/// Normal-form game files for the one-shot commands:
/// {"players": k, "actions": [...], "tensors": [[...], ...]}.
NormalFormGame game_from_json(const std::string& text);

}  // namespace tailgame
