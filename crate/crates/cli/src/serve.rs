//! Line-delimited document exchange with a live federation engine.

use std::io::{BufRead, Write};

use aerofed_core::federation::FederationError;
use aerofed_core::wire::{self, parse_inbound, ErrorDocument, Inbound, OfferAck, ReleaseAck};
use aerofed_core::{AcceptAll, AcquisitionStrategy, BudgetGreedy, EngineConfig, FederationEngine};

use crate::args::EngineArgs;
use crate::Failure;

pub fn engine(args: &EngineArgs) -> Result<FederationEngine, Failure> {
    let strategy: Box<dyn AcquisitionStrategy> = match args.budget {
        Some(b) if !(b.is_finite() && b >= 0.0) => {
            return Err(Failure::Usage(format!(
                "--budget must be finite and >= 0, got {b}"
            )))
        }
        Some(b) => Box::new(BudgetGreedy::new(b)),
        None => Box::new(AcceptAll),
    };
    if !(args.cached_hit_delay_s.is_finite() && args.cached_hit_delay_s >= 0.0) {
        return Err(Failure::Usage(
            "--cached-hit-delay-s must be finite and >= 0".into(),
        ));
    }
    let config = EngineConfig {
        cached_hit_delay_s: args.cached_hit_delay_s,
        ..EngineConfig::default()
    };
    Ok(FederationEngine::new(strategy, config))
}

/// Handles one document and returns the response line, without a newline.
/// The boolean is false when the response is an error document.
pub fn handle_line(engine: &mut FederationEngine, line: &[u8]) -> (String, bool) {
    let failed = |kind: &str, msg: String| {
        (
            wire::to_canonical_string(&ErrorDocument::new(kind, msg)),
            false,
        )
    };
    let fed = |e: FederationError| failed(e.kind(), e.to_string());
    match parse_inbound(line) {
        Err(e) => failed(e.kind(), e.to_string()),
        Ok(Inbound::Offer(offer)) => match engine.submit_offer(&offer) {
            Ok(accepted) => (
                wire::to_canonical_string(&OfferAck::new(&offer.offer_id, accepted)),
                true,
            ),
            Err(e) => fed(e),
        },
        Ok(Inbound::Request(request)) => match engine.handle_request(&request) {
            Ok(decision) => (
                String::from_utf8(wire::emit(&decision)).expect("canonical JSON is UTF-8"),
                true,
            ),
            Err(e) => fed(e),
        },
        Ok(Inbound::Release(id)) => match engine.release_request(&id) {
            Ok(()) => (wire::to_canonical_string(&ReleaseAck::new(&id)), true),
            Err(e) => fed(e),
        },
    }
}

/// Feeds every non-blank line to the engine, writing one response per line.
/// Returns the number of error documents produced.
pub fn pump(
    engine: &mut FederationEngine,
    input: impl BufRead,
    mut out: Option<&mut dyn Write>,
) -> Result<usize, Failure> {
    let mut errors = 0;
    for line in input.split(b'\n') {
        let line = line.map_err(|e| Failure::Io(format!("reading input: {e}")))?;
        let line = line.strip_suffix(b"\r").unwrap_or(&line);
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let (response, ok) = handle_line(engine, line);
        if !ok {
            errors += 1;
        }
        if let Some(out) = out.as_deref_mut() {
            writeln!(out, "{response}")
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(format!("writing output: {e}")))?;
        }
    }
    Ok(errors)
}
