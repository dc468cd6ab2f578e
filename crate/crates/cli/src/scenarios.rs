/// Bundled scenarios: name and TOML source.
pub const BUNDLED: &[(&str, &str)] = &[
    ("fig1_obc", include_str!("../scenarios/fig1_obc.toml")),
    ("fig1_pbc", include_str!("../scenarios/fig1_pbc.toml")),
    ("fig2", include_str!("../scenarios/fig2.toml")),
    ("fig3", include_str!("../scenarios/fig3.toml")),
    ("fig4a", include_str!("../scenarios/fig4a.toml")),
    ("fig4b", include_str!("../scenarios/fig4b.toml")),
    ("fig5", include_str!("../scenarios/fig5.toml")),
    ("fig6", include_str!("../scenarios/fig6.toml")),
    ("fig7", include_str!("../scenarios/fig7.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// The `description` line of a bundled scenario.
pub fn description(src: &str) -> &str {
    src.lines()
        .find_map(|l| l.strip_prefix("description = \""))
        .and_then(|l| l.strip_suffix('"'))
        .unwrap_or("")
}
