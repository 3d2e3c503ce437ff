use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cluster_conductor::families::{Base, Family, FamilyParams};
use cluster_conductor::Error;
use num_bigint::BigInt;

#[derive(Parser, Debug)]
#[command(name = "cluster-conductor", version, about = "Cluster pictures and conductor exponents at odd places")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cluster pictures at the bad odd places of one curve.
    Picture(InstanceArgs),
    /// Conductor exponents at the bad odd places of one curve.
    Conductor(ConductorArgs),
    /// Cross-check a grid of curves against the oracles.
    Verify(VerifyArgs),
    /// Conductor table over a grid of curves.
    Table(TableArgs),
    /// Picture and conductor of a user-supplied valuation matrix.
    Generic(GenericArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ascii,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaseChoice {
    Q,
    Kplus,
    Both,
}

impl BaseChoice {
    pub fn bases(self) -> Vec<Base> {
        match self {
            BaseChoice::Q => vec![Base::Q],
            BaseChoice::Kplus => vec![Base::Kplus],
            BaseChoice::Both => vec![Base::Q, Base::Kplus],
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::from_str(s).map_err(|e| e.to_string())
}

fn parse_base(s: &str) -> Result<Base, String> {
    Base::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    #[arg(long)]
    pub r: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<BigInt>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<BigInt>,
    /// Stand-in for a^p in the C_r^± families.
    #[arg(long = "A", allow_hyphen_values = true)]
    pub big_a: Option<BigInt>,
    /// Stand-in for b^p; defaults to c^r − A.
    #[arg(long = "B", allow_hyphen_values = true)]
    pub big_b: Option<BigInt>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<BigInt>,
    /// Restrict to one rational prime.
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long, value_parser = parse_base, default_value = "q")]
    pub base: Base,
    #[arg(long, value_enum, default_value = "ascii")]
    pub format: Format,
    /// Label roots g0, g1, ... even on a UTF-8 terminal.
    #[arg(long)]
    pub ascii_labels: bool,
}

impl InstanceArgs {
    pub fn params(&self) -> Result<FamilyParams, Error> {
        let missing = |name: &str| Error::InvalidParams(format!("--{name} is required for family {}", self.family));
        match self.family {
            Family::Cr => {
                if self.big_a.is_some() || self.big_b.is_some() || self.c.is_some() {
                    return Err(Error::InvalidParams("family cr takes --a and --b only".into()));
                }
                let a = self.a.clone().ok_or_else(|| missing("a"))?;
                let b = self.b.clone().ok_or_else(|| missing("b"))?;
                FamilyParams::cr(self.r, a, b)
            }
            Family::CrMinus | Family::CrPlus => {
                if self.a.is_some() || self.b.is_some() {
                    return Err(Error::InvalidParams("families crminus/crplus take --A, --B and --c".into()));
                }
                let big_a = self.big_a.clone().ok_or_else(|| missing("A"))?;
                let c = self.c.clone().ok_or_else(|| missing("c"))?;
                let big_b = match &self.big_b {
                    Some(b) => b.clone(),
                    None => c.pow(self.r) - &big_a,
                };
                if self.family == Family::CrMinus {
                    FamilyParams::cr_minus(self.r, big_a, big_b, c)
                } else {
                    FamilyParams::cr_plus(self.r, big_a, big_b, c)
                }
            }
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ConductorArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Use the twist by a uniformizer where its conductor is tabulated.
    #[arg(long)]
    pub twist: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridFamily {
    Cr,
    Crminus,
    Crplus,
    /// Both C_r^− and C_r^+.
    Cpm,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub family: GridFamily,
    #[arg(long = "r", value_delimiter = ',', required = true)]
    pub rs: Vec<u32>,
    /// C_r grid: all coprime (a, b) with 0 < |a|, |b| ≤ bound.
    #[arg(long, default_value_t = 20)]
    pub bound: i64,
    /// C_r^± grid: values of c.
    #[arg(long = "c", value_delimiter = ',')]
    pub cs: Vec<i64>,
    /// C_r^± grid: largest A tried (default c^r − 1).
    #[arg(long)]
    pub a_max: Option<i64>,
    #[arg(long, value_enum, default_value = "both")]
    pub base: BaseChoice,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Destination of the per-place CSV.
    #[arg(long, default_value = "verification.csv")]
    pub csv: PathBuf,
    /// Destination of the failure report.
    #[arg(long, default_value = "failures.json")]
    pub failures: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct GenericArgs {
    /// JSON file with matrix, leading_val, inertia, tame, wild_orbits and
    /// ram_index.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub ascii_labels: bool,
}
