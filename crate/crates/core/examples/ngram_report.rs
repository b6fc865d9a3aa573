//! Which n-grams missing from a baseline a second system recovers.

use simulcorpus::ngram_analysis::{ngram_report, reference_figure, FigureTable};

fn lines(text: &[&str]) -> Vec<String> {
    text.iter().map(|s| s.to_string()).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold = lines(&["we vote tomorrow on the report", "thank you very much"]);
    let baseline = lines(&["we will vote on the report tomorrow", "thank you"]);
    let system = lines(&["we vote on the report tomorrow", "thank you very much"]);
    let reports = ngram_report(&gold, &baseline, &[("rewrite".to_string(), system)], 3)?;
    for row in &reports[0].rows {
        println!(
            "{}-gram: missing {}  introduced {}  correct {}  {:.1}%",
            row.n,
            row.missing_count,
            row.introduced_count,
            row.introduced_correct_count,
            row.percentage
        );
    }
    println!("\n{}", FigureTable::from_reports(&reports).render());
    println!("\nreference\n{}", reference_figure().render());
    Ok(())
}
