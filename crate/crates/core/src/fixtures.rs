//! Reference graphs used throughout the tests and by `esep sweep --builtin`.

use crate::graph::Dag;
use crate::parse::parse_graph;

/// Instrument Z, treatment X, outcome Y, latent confounder U of X and Y.
pub const IV: &str = "\
Z -> X
X -> Y
latent U
U -> X
U -> Y
";

/// The instrumental model with a direct edge from the instrument to the outcome.
pub const IV_DIRECT: &str = "\
Z -> X
X -> Y
Z -> Y
latent U
U -> X
U -> Y
";

/// Unrelated confounding: X causes Z and Y; Z and Y each share a different latent with X.
pub const UC: &str = "\
X -> Z
X -> Y
latent U1
latent U2
U1 -> X
U1 -> Z
U2 -> X
U2 -> Y
";

/// Four observed vertices with three independent latent pairs and no X–Y edge.
pub const GADGET: &str = "\
var X
var Y
var Z
var W
Z -> Y
W -> X
W <-> Y
X <-> Z
Z <-> W
";

/// [`GADGET`] with the edge X -> Y added, so the effect of X on Y can be bounded.
pub const GADGET_EFFECT: &str = "\
var X
var Y
var Z
var W
Z -> Y
W -> X
X -> Y
W <-> Y
X <-> Z
Z <-> W
";

pub fn iv_graph() -> Dag {
    parse_graph(IV).expect("fixture parses")
}

pub fn iv_direct_graph() -> Dag {
    parse_graph(IV_DIRECT).expect("fixture parses")
}

pub fn uc_graph() -> Dag {
    parse_graph(UC).expect("fixture parses")
}

pub fn gadget_graph() -> Dag {
    parse_graph(GADGET).expect("fixture parses")
}

pub fn gadget_effect_graph() -> Dag {
    parse_graph(GADGET_EFFECT).expect("fixture parses")
}

/// Looks up a built-in graph by name.
pub fn builtin(name: &str) -> Option<Dag> {
    match name {
        "iv" => Some(iv_graph()),
        "iv-direct" => Some(iv_direct_graph()),
        "uc" => Some(uc_graph()),
        "gadget" => Some(gadget_graph()),
        "gadget-effect" => Some(gadget_effect_graph()),
        _ => None,
    }
}
