use gaeq::{Algebra, AlgebraKind, Blade};
use serde::Serialize;

use crate::output::{to_json, write_file, Table};
use crate::{Global, Status};

#[derive(Serialize)]
struct Row {
    left: String,
    right: String,
    sign: i8,
    product: String,
}

#[derive(Serialize)]
struct ProductTable {
    algebra: AlgebraKind,
    product: &'static str,
    generators: Vec<String>,
    squares: Vec<i8>,
    rows: Vec<Row>,
}

fn table(alg: &Algebra, product: &'static str) -> anyhow::Result<ProductTable> {
    let mut rows = Vec::with_capacity(alg.size() * alg.size());
    for a in 0..alg.size() {
        for b in 0..alg.size() {
            let (a, b) = (Blade(a as u16), Blade(b as u16));
            let e = match product {
                "join" => alg.join_entry(a, b)?,
                _ => alg.product(a, b),
            };
            rows.push(Row {
                left: alg.blade_name(a),
                right: alg.blade_name(b),
                sign: e.sign,
                product: if e.sign == 0 { "0".into() } else { alg.blade_name(e.out) },
            });
        }
    }
    Ok(ProductTable {
        algebra: alg.require_kind()?,
        product,
        generators: alg.signature().names().to_vec(),
        squares: alg.signature().squares().to_vec(),
        rows,
    })
}

pub fn run(g: &Global) -> anyhow::Result<Status> {
    let kinds = match g.algebra {
        Some(k) => vec![k],
        None => vec![AlgebraKind::Ega, AlgebraKind::Pga, AlgebraKind::Cga],
    };
    let mut tables = Vec::new();
    for k in kinds {
        let alg = k.algebra();
        tables.push(table(&alg, "geometric")?);
        if alg.is_projective() {
            tables.push(table(&alg, "join")?);
        }
    }
    let Some(dir) = &g.out else {
        print!("{}", to_json(&tables)?);
        return Ok(Status::Pass);
    };
    let mut summary = Table::new(&["file", "rows"]);
    let mut files = Vec::new();
    for t in &tables {
        let prefix = if t.product == "join" { "join" } else { "cayley" };
        let path = dir.join(format!("{prefix}_{}.json", t.algebra));
        write_file(&path, &to_json(t)?)?;
        summary.row(vec![path.display().to_string(), t.rows.len().to_string()]);
        files.push(serde_json::json!({ "file": path, "rows": t.rows.len() }));
    }
    if g.json {
        print!("{}", to_json(&files)?);
    } else {
        print!("{}", summary.render());
    }
    Ok(Status::Pass)
}
