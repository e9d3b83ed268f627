use std::path::Path;

use scarforge_core::synth::SynthConfig;

use crate::Failure;

/// Environment override for the master seed; loses to `--seed`.
pub const SEED_ENV: &str = "SCARFORGE_SEED";

/// Config file (or defaults), then the seed from the environment, then the
/// seed flag.
pub fn resolve_config(
    file: Option<&Path>,
    seed_flag: Option<u64>,
    seed_env: Option<&str>,
) -> Result<SynthConfig, String> {
    let mut cfg = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            SynthConfig::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(raw) = seed_env {
        cfg.master_seed = raw
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_ENV}={raw:?} is not an unsigned integer"))?;
    }
    if let Some(s) = seed_flag {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

pub(crate) fn config_for_run(file: Option<&Path>, seed_flag: Option<u64>) -> Result<SynthConfig, Failure> {
    let env = std::env::var(SEED_ENV).ok();
    resolve_config(file, seed_flag, env.as_deref()).map_err(Failure::Usage)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flag_then_env_then_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.txt");
        std::fs::write(&p, "master_seed = 3\nlambda = 0.5\n").unwrap();
        let cfg = resolve_config(Some(&p), None, None).unwrap();
        assert_eq!((cfg.master_seed, cfg.lambda), (3, 0.5));
        assert_eq!(resolve_config(Some(&p), None, Some("9")).unwrap().master_seed, 9);
        assert_eq!(resolve_config(Some(&p), Some(1), Some("9")).unwrap().master_seed, 1);
        assert_eq!(resolve_config(None, None, None).unwrap(), SynthConfig::default());
        assert!(resolve_config(None, None, Some("x")).is_err());
        std::fs::write(&p, "lambda = 2\n").unwrap();
        assert!(resolve_config(Some(&p), None, None).is_err());
    }
}
