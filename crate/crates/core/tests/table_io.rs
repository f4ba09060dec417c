use proptest::prelude::*;
use rand::Rng as _;
use tabvote_core::preprocess::{apply_imputer, fit_imputer};
use tabvote_core::rng::rng_from_seed;
use tabvote_core::table::{load_csv, parse_csv_str, validate};
use tabvote_core::{Cell, ColumnSchema, Schema, Table};

fn schema(n_features: usize) -> Schema {
    let mut columns: Vec<ColumnSchema> = (0..n_features).map(|i| ColumnSchema::categorical(format!("f{i}"))).collect();
    columns.push(ColumnSchema::target("label"));
    Schema::new(columns, "Yes", "No").unwrap()
}

fn cell_strategy() -> impl Strategy<Value = Cell> {
    prop_oneof![
        1 => Just(Cell::Missing),
        6 => "[a-zA-Z0-9]([a-zA-Z0-9 ,\"'-]{0,8}[a-zA-Z0-9])?"
            .prop_filter("not a missing token", |s| s != "NA" && s != "N/A")
            .prop_map(Cell::value),
    ]
}

fn table_strategy() -> impl Strategy<Value = Table> {
    (1usize..5, 1usize..30).prop_flat_map(|(n_features, n_rows)| {
        let features = prop::collection::vec(prop::collection::vec(cell_strategy(), n_rows), n_features);
        let target = prop::collection::vec(prop::bool::ANY.prop_map(|b| Cell::value(if b { "Yes" } else { "No" })), n_rows);
        (features, target).prop_map(move |(mut columns, target)| {
            columns.push(target);
            Table::new(schema(n_features), columns).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_roundtrip(table in table_strategy()) {
        let text = table.to_csv_string();
        let parsed = parse_csv_str(&text, table.schema()).unwrap();
        prop_assert_eq!(parsed, table);
    }
}

fn survey_like_csv(n_rows: usize, seed: u64) -> String {
    let mut rng = rng_from_seed(seed);
    let mut csv = String::from("Age,Type of Disaster Faced,Felt Safe During the Disaster,PTSD\n");
    let ages = ["18-25", "26-35", "36-45", "46+"];
    let disasters = ["Flood", "Cyclone", "Riverbank erosion", "NA"];
    for _ in 0..n_rows {
        let label = if rng.random_bool(0.2) { "Yes" } else { "No" };
        csv.push_str(&format!(
            "{},{},{},{label}\n",
            ages[rng.random_range(0..4)],
            disasters[rng.random_range(0..4)],
            if rng.random_bool(0.5) { "Yes" } else { "No" }
        ));
    }
    csv
}

fn survey_schema() -> Schema {
    Schema::new(
        vec![
            ColumnSchema::categorical("Age"),
            ColumnSchema::categorical("Type of Disaster Faced"),
            ColumnSchema::categorical("Felt Safe During the Disaster"),
            ColumnSchema::target("PTSD"),
        ],
        "Yes",
        "No",
    )
    .unwrap()
}

#[test]
fn loads_eight_thousand_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("survey.csv");
    std::fs::write(&path, survey_like_csv(8000, 1)).unwrap();
    let table = load_csv(&path, &survey_schema()).unwrap();
    assert_eq!(table.n_rows(), 8000);
    let report = validate(&table).unwrap();
    assert!(report.total_missing() > 0);

    let names = table.schema().feature_names();
    let state = fit_imputer(&table, &names).unwrap();
    let imputed = apply_imputer(&state, &table).unwrap();
    assert_eq!(imputed.n_rows(), 8000);
    assert_eq!(validate(&imputed).unwrap().total_missing(), 0);
    for (before, after) in table.columns().iter().zip(imputed.columns()) {
        for (b, a) in before.iter().zip(after) {
            if !b.is_missing() {
                assert_eq!(a, b);
            }
        }
    }
}
