//! Records completions into a cache, then replays them with no backend.
use utdebug::gateway::{Gateway, GenRequest, ChatMessage, Matcher, ReplayCache, ScriptEntry, ScriptedBackend};

fn main() -> utdebug::Result<()> {
    let dir = tempfile::tempdir()?;
    let req = GenRequest::new(vec![ChatMessage::user("Say hi")], 2, "demo/greeting");

    let backend = ScriptedBackend::new(vec![ScriptEntry::repeating(Matcher::any(), vec!["hi".into(), "hello".into()])]);
    let recorder = Gateway::new(backend).with_cache(ReplayCache::open(dir.path())?);
    let first = recorder.generate(&req)?;
    println!("recorded: {:?}", first.completions);

    let replay = Gateway::replay(ReplayCache::open(dir.path())?);
    let again = replay.generate(&req)?;
    println!("replayed: {:?} (hit ratio {:.2})", again.completions, replay.stats().hit_ratio());

    let miss = GenRequest::new(vec![ChatMessage::user("Something new")], 1, "demo/other");
    println!("uncached request: {}", replay.generate(&miss).unwrap_err());
    Ok(())
}
