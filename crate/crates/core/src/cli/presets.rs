//! Experiment presets shipped with the crate, one per reproduced figure.

pub const NAMES: [&str; 6] = ["fig2a", "fig3", "fig4", "fig5", "fig6", "fig8"];

/// Config text of a preset; `fig3a` and `fig6b` name the panels of `fig3` and `fig6`.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2a" => include_str!("../../presets/fig2a.conf"),
        "fig3" | "fig3a" => include_str!("../../presets/fig3.conf"),
        "fig4" => include_str!("../../presets/fig4.conf"),
        "fig5" => include_str!("../../presets/fig5.conf"),
        "fig6" | "fig6b" => include_str!("../../presets/fig6.conf"),
        "fig8" => include_str!("../../presets/fig8.conf"),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::RunConfig;

    #[test]
    fn presets_parse_and_validate() {
        for name in NAMES.iter().chain(&["fig3a", "fig6b"]) {
            let c = RunConfig::parse(preset(name).unwrap()).unwrap();
            c.validate().unwrap();
        }
        assert!(preset("fig7").is_none());
    }
}
