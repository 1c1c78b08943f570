use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use samplab::isolators::PartTag;
use samplab::rational::{format_q, parse_q};
use samplab::{Exponent, Q};

/// A rational parameter: `"3/8"`, `"-2"` or a JSON integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub Q);

impl FromStr for Rat {
    type Err = samplab::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_q(s).map(Rat)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_q(&self.0))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) if n.is_i64() => Ok(Rat(Q::from_integer(n.as_i64().unwrap_or(0).into()))),
            other => Err(serde::de::Error::custom(format!("expected a rational such as \"1/4\", got {other}"))),
        }
    }
}

fn parse_tag(s: &str) -> Result<PartTag, String> {
    match s {
        "constant" => Ok(PartTag::Constant),
        "high_entropy" | "high-entropy" => Ok(PartTag::HighEntropy),
        _ => Err(format!("unknown part tag {s:?} (constant or high_entropy)")),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON run configuration; its values take precedence over flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Cap on enumerated class members, family members or search candidates.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

macro_rules! params {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* #[arg(long)] #[serde(default, skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }
    };
}

params!(TvArgs { p: PathBuf, q: PathBuf });
params!(EntropyArgs {
    dist: PathBuf,
    /// Also report the light set at threshold 2^-k.
    k: Exponent,
});
params!(SmoothArgs { dist: PathBuf, k: u32 });
params!(ExactOutputArgs { source: PathBuf });
params!(AddrArgs {
    /// A source on t(n+1) bits; give this or `dist`.
    source: PathBuf,
    dist: PathBuf,
    n: u32,
    t: u32,
});
params!(EnumerateArgs {
    class: PathBuf,
    /// Number of leading members to list.
    limit: u64,
});
params!(VerifyIsolatorArgs { isolator: PathBuf });
params!(SearchIsolatorArgs {
    class: PathBuf,
    n: u32,
    m: u32,
    /// Independence of the hash family (number of coefficients).
    t: u32,
    alpha: Rat,
    beta: Rat,
    k: Exponent,
});
params!(InputReduceArgs {
    map: PathBuf,
    eps: Rat,
    /// Overrides ceil(n + 3 log2(1/eps)).
    ell: u32,
});
params!(LiftArgs {
    isolator: PathBuf,
    k: i64,
    /// Class on which to verify the lifted claim.
    verify_class: PathBuf,
});
params!(IsoFromRextArgs {
    rext: PathBuf,
    z: String,
    eps: Rat,
    delta: Rat,
    k: Exponent,
    verify_class: PathBuf,
});
params!(MixtureBoundArgs {
    ext: PathBuf,
    mixture: PathBuf,
    /// Comma-separated `constant` / `high_entropy`, one per part.
    tags: String,
    z: u64,
    eps: Rat,
    k: Exponent,
    k_prime: Exponent,
    gamma: Rat,
});
params!(TwoSourceArgs {
    x: PathBuf,
    y: PathBuf,
    ext: PathBuf,
    k: i64,
    k0: i64,
    k1: i64,
    k2: i64,
    eps: Rat,
    z: u64,
});
params!(CommMixtureArgs { protocol: PathBuf });
params!(RobpCutArgs { robp: PathBuf, cut: u32 });
params!(BuildHardDistArgs { iso: PathBuf, t: u32 });
params!(BoundArgs { alpha: Rat, beta: Rat, k: i64, n: u32, t: u32 });
params!(CertifyTheoremArgs {
    isolator: PathBuf,
    t: u32,
    class: PathBuf,
    /// Keep every member's distance in the report.
    record: bool,
});
params!(CountingSearchArgs { class: PathBuf, n: u32, s: u32, trials: u32 });

impl MixtureBoundArgs {
    pub fn parsed_tags(tags: &str) -> Result<Vec<PartTag>, String> {
        tags.split(',').map(|t| parse_tag(t.trim())).collect()
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total variation distance between two distributions.
    Tv(TvArgs),
    /// Min-entropy and, with `k`, the light set.
    Entropy(EntropyArgs),
    /// Greedy smoothing buckets at 2^-k.
    Smooth(SmoothArgs),
    ExactOutput(ExactOutputArgs),
    /// Distribution of addr_{n,t} applied to a source or distribution.
    Addr(AddrArgs),
    /// Size and leading members of a source class.
    Enumerate(EnumerateArgs),
    VerifyIsolator(VerifyIsolatorArgs),
    /// First hash-family member that verifies as an isolator.
    SearchIsolator(SearchIsolatorArgs),
    /// Affine restriction of a polynomial map to fewer inputs.
    InputReduce(InputReduceArgs),
    /// Lift an isolator for bounded-input sources to all sources of its degree.
    Lift(LiftArgs),
    IsoFromRext(IsoFromRextArgs),
    MixtureBound(MixtureBoundArgs),
    TwoSource(TwoSourceArgs),
    /// Decompose a protocol's output into a mixture of products.
    CommMixture(CommMixtureArgs),
    /// Turn a branching program into a protocol by cutting it.
    RobpCut(RobpCutArgs),
    BuildHardDist(BuildHardDistArgs),
    /// The distance lower bound and its components.
    Bound(BoundArgs),
    /// Exhaustive distance sweep of a class against the hard distribution.
    CertifyTheorem(CertifyTheoremArgs),
    CountingSearch(CountingSearchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tv(_) => "tv",
            Command::Entropy(_) => "entropy",
            Command::Smooth(_) => "smooth",
            Command::ExactOutput(_) => "exact-output",
            Command::Addr(_) => "addr",
            Command::Enumerate(_) => "enumerate",
            Command::VerifyIsolator(_) => "verify-isolator",
            Command::SearchIsolator(_) => "search-isolator",
            Command::InputReduce(_) => "input-reduce",
            Command::Lift(_) => "lift",
            Command::IsoFromRext(_) => "iso-from-rext",
            Command::MixtureBound(_) => "mixture-bound",
            Command::TwoSource(_) => "two-source",
            Command::CommMixture(_) => "comm-mixture",
            Command::RobpCut(_) => "robp-cut",
            Command::BuildHardDist(_) => "build-hard-dist",
            Command::Bound(_) => "bound",
            Command::CertifyTheorem(_) => "certify-theorem",
            Command::CountingSearch(_) => "counting-search",
        }
    }
}
