//! Renders a unit test in prompt form and parses a model-style reply back.
use utdebug::literal::canonical_literal;
use utdebug::model::{render_unit_test, UnitTest, UtOrigin};
use utdebug::prompts::parse_unit_test;

fn main() -> utdebug::Result<()> {
    let ut = UnitTest::new(vec!["[3, 1, 2]".into(), "'k'".into()], "{'k': 3}", UtOrigin::GeneratedPrompted);
    let text = render_unit_test(&ut, "index_max");
    println!("{text}\n");

    let reply = "## Hypothesis\n\nThe last element is skipped.\n\nError Pattern: off by one\n\n\
                 ## Unit Test\n\n### Input Arguments\n\nArguments: index_max([3,  1, 2], 'k')\n\n### Output\n\nOutput: {'k' : 3}";
    let parsed = parse_unit_test(reply, "index_max")?;
    println!("args:       {:?}", parsed.args);
    println!("output:     {:?}", parsed.output);
    println!("hypothesis: {:?}", parsed.hypothesis);
    println!("canonical:  {}", canonical_literal(parsed.output.as_deref().unwrap_or("")));
    Ok(())
}
