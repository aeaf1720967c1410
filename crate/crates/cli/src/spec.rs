//! The group spec mini-language: `alt:k`, `sym:k`, `tree:d,D`, `grig`,
//! `thompson`.

use std::fmt;
use std::str::FromStr;

use lawless_core::trees::MAX_ARITY;
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSpec {
    Alt(usize),
    Sym(usize),
    Tree { arity: usize, depth: usize },
    Grig,
    Thompson,
}

// Degrees beyond this make even building the chain pointless here.
const MAX_DEGREE: usize = 1000;
const MAX_TREE_DEPTH: usize = 20;

impl FromStr for GroupSpec {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let bad = |why: &str| format!("bad group spec {text:?}: {why}");
        let number = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("expected a number"));
        match text.split_once(':') {
            None => match text {
                "grig" => Ok(GroupSpec::Grig),
                "thompson" => Ok(GroupSpec::Thompson),
                _ => Err(bad("expected alt:k, sym:k, tree:d,D, grig or thompson")),
            },
            Some((kind, args)) => match kind {
                "alt" | "sym" => {
                    let k = number(args)?;
                    if !(1..=MAX_DEGREE).contains(&k) {
                        return Err(bad(&format!("degree must be in 1..={MAX_DEGREE}")));
                    }
                    Ok(if kind == "alt" { GroupSpec::Alt(k) } else { GroupSpec::Sym(k) })
                }
                "tree" => {
                    let (d, depth) = args.split_once(',').ok_or_else(|| bad("expected tree:d,D"))?;
                    let (arity, depth) = (number(d)?, number(depth)?);
                    if !(2..=MAX_ARITY).contains(&arity) || !(1..=MAX_TREE_DEPTH).contains(&depth) {
                        return Err(bad(&format!("need 2 <= d <= {MAX_ARITY} and 1 <= D <= {MAX_TREE_DEPTH}")));
                    }
                    Ok(GroupSpec::Tree { arity, depth })
                }
                _ => Err(bad("unknown group kind")),
            },
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Alt(k) => write!(f, "alt:{k}"),
            GroupSpec::Sym(k) => write!(f, "sym:{k}"),
            GroupSpec::Tree { arity, depth } => write!(f, "tree:{arity},{depth}"),
            GroupSpec::Grig => f.write_str("grig"),
            GroupSpec::Thompson => f.write_str("thompson"),
        }
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
