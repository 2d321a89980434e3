use smoothlab::corpus;
use smoothlab::instance::build_instance;

fn main() {
    let start = std::time::Instant::now();
    let corpus = corpus::full_corpus();
    println!("corpus built: {} instances in {:?}", corpus.len(), start.elapsed());
    for f in &corpus {
        let loaded = build_instance(f).expect("builds");
        println!("  {} ({})", f.name, loaded.family_name());
    }
}
