//! Built-in additive functions and target laws, by name.

use additive_core::additive::AdditiveFunctionSpec;
use additive_core::step::StepDistribution;

use crate::CliError;

pub struct Entry {
    pub name: &'static str,
    pub syntax: &'static str,
    pub description: &'static str,
}

pub const SPECS: &[Entry] = &[
    Entry {
        name: "omega",
        syntax: "omega",
        description: "g(p) = 1, the number of distinct prime factors",
    },
    Entry {
        name: "zero",
        syntax: "zero",
        description: "g(p) = 0 (degenerate; rejected by every pipeline)",
    },
    Entry {
        name: "constant",
        syntax: "constant:C",
        description: "g(p) = C",
    },
    Entry {
        name: "two-value",
        syntax: "two-value:A,B[,mod=M,res=R]",
        description: "selector parity (default): A on odd prime index (2, 5, 11, ...), B on even; selector residue: A when p = R mod M, else B",
    },
    Entry {
        name: "congruence",
        syntax: "congruence:M,R,V",
        description: "g(p) = V when p = R mod M, else 0",
    },
    Entry {
        name: "sampled",
        syntax: "sampled:TARGET",
        description: "values assigned to primes so that the prime-side law tracks TARGET",
    },
];

pub const TARGETS: &[Entry] = &[
    Entry {
        name: "delta",
        syntax: "delta:A",
        description: "unit step at A (value 1/2 at the jump)",
    },
    Entry {
        name: "atoms",
        syntax: "atoms:A1@W1,A2@W2,...",
        description: "finite-atom law, masses summing to 1, locations > 0",
    },
];

fn num(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("'{s}' is not a number")))
}

fn int(s: &str) -> Result<u32, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("'{s}' is not an integer")))
}

pub fn parse_spec(s: &str) -> Result<AdditiveFunctionSpec, CliError> {
    let (name, params) = match s.split_once(':') {
        Some((n, p)) => (n.trim(), p),
        None => (s.trim(), ""),
    };
    let args: Vec<&str> = if params.is_empty() {
        Vec::new()
    } else {
        params.split(',').collect()
    };
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(CliError::Invalid(format!("spec '{name}' takes {n} parameters, got {}", args.len())))
        }
    };
    match name {
        "omega" => arity(0).map(|_| AdditiveFunctionSpec::omega()),
        "zero" => arity(0).map(|_| AdditiveFunctionSpec::zero()),
        "constant" => {
            arity(1)?;
            Ok(AdditiveFunctionSpec::constant(num(args[0])?))
        }
        "two-value" => match args.len() {
            2 => Ok(AdditiveFunctionSpec::two_value(num(args[0])?, num(args[1])?)),
            4 => {
                let field = |s: &str, key: &str| -> Result<u32, CliError> {
                    let (k, v) = s
                        .split_once('=')
                        .ok_or_else(|| CliError::Invalid(format!("expected {key}=N, got '{s}'")))?;
                    if k.trim() != key {
                        return Err(CliError::Invalid(format!("expected {key}=N, got '{s}'")));
                    }
                    int(v)
                };
                let modulus = field(args[2], "mod")?;
                let residue = field(args[3], "res")?;
                if modulus == 0 {
                    return Err(CliError::Invalid("modulus must be positive".into()));
                }
                Ok(AdditiveFunctionSpec::two_value_residue(
                    num(args[0])?,
                    num(args[1])?,
                    modulus,
                    residue,
                ))
            }
            n => Err(CliError::Invalid(format!("spec 'two-value' takes 2 or 4 parameters, got {n}"))),
        },
        "congruence" => {
            arity(3)?;
            let modulus = int(args[0])?;
            if modulus == 0 {
                return Err(CliError::Invalid("modulus must be positive".into()));
            }
            Ok(AdditiveFunctionSpec::congruence(modulus, int(args[1])?, num(args[2])?))
        }
        "sampled" => Ok(AdditiveFunctionSpec::sampled(parse_target(params)?)),
        other => Err(CliError::Invalid(format!("unknown spec '{other}' (see list-specs)"))),
    }
}

pub fn parse_target(s: &str) -> Result<StepDistribution, CliError> {
    Ok(StepDistribution::parse(s)?)
}

pub fn listing() -> String {
    let mut out = String::from("additive functions:\n");
    for e in SPECS {
        out.push_str(&format!("  {:<12} {:<30} {}\n", e.name, e.syntax, e.description));
    }
    out.push_str("targets:\n");
    for e in TARGETS {
        out.push_str(&format!("  {:<12} {:<30} {}\n", e.name, e.syntax, e.description));
    }
    out
}
