//! End-to-end command-line pipeline run in-process.

use std::fs;

fn main() -> vollab::Result<()> {
    let dir = std::env::temp_dir().join("vollab_cli_pipeline");
    fs::create_dir_all(&dir)?;
    let design = dir.join("dgp.toml");
    fs::write(
        &design,
        "[dgp]\nvolatility = { model = \"fgarch\" }\ninnovation = \"nig\"\n\
         [dgp.params]\nmu = 0.05\nomega = 0.0443\nalpha1 = 0.09\nbeta1 = 0.8113\n\
         gamma = 1.9993\nzeta1_1 = -0.1919\nzeta2_1 = 1.3191\nalpha = 1.5\nbeta = 0.0\n",
    )?;
    let returns = dir.join("returns.csv");
    let s = |p: &std::path::Path| p.to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "--design".into(), s(&design), "--n".into(), "3000".into(), "--seed".into(), "1".into(), "--out".into(), s(&returns)],
        vec!["fit".into(), "--model".into(), "fgarch".into(), "--innovation".into(), "nig".into(), "--starts".into(), "1".into(), s(&returns)],
        vec!["diagnose".into(), s(&returns), "--model".into(), "garch".into(), "--lags".into(), "5,9".into(), "--tests".into(), "wlb,archlm,pq".into()],
        vec!["report".into(), s(&returns), "--model".into(), "garch".into(), "--out-dir".into(), s(&dir.join("report"))],
    ];
    for args in steps {
        println!("$ vollab {}", args.join(" "));
        let code = vollab::cli::run(std::iter::once("vollab".to_string()).chain(args));
        println!("exit code {code}\n");
    }
    Ok(())
}
