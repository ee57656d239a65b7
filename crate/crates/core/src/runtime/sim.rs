use std::thread;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use super::{root_cause, CommStats, Party, PartyId, PrfSetup, RunOutput, Transport, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};

/// In-memory transport; one unbounded queue per ordered pair of parties.
pub struct SimTransport {
    me: PartyId,
    to: [Option<Sender<Vec<u8>>>; 3],
    from: [Option<Receiver<Vec<u8>>>; 3],
    timeout: Duration,
}

pub fn sim_mesh(timeout: Duration) -> [SimTransport; 3] {
    let mut to: [[Option<Sender<Vec<u8>>>; 3]; 3] = Default::default();
    let mut from: [[Option<Receiver<Vec<u8>>>; 3]; 3] = Default::default();
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                let (tx, rx) = unbounded();
                to[a][b] = Some(tx);
                from[b][a] = Some(rx);
            }
        }
    }
    let mut to = to.into_iter();
    let mut from = from.into_iter();
    PartyId::ALL.map(|me| SimTransport {
        me,
        to: to.next().unwrap(),
        from: from.next().unwrap(),
        timeout,
    })
}

impl Transport for SimTransport {
    fn send(&mut self, to: PartyId, payload: Vec<u8>) -> Result<()> {
        let closed = Error::ChannelClosed {
            party: self.me,
            peer: to,
        };
        match &self.to[to.index()] {
            Some(tx) => tx.send(payload).map_err(|_| closed),
            None => Err(closed),
        }
    }

    fn recv(&mut self, from: PartyId) -> Result<Vec<u8>> {
        let rx = self.from[from.index()].as_ref().ok_or(Error::ChannelClosed {
            party: self.me,
            peer: from,
        })?;
        rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => Error::ProtocolOrder {
                party: self.me,
                peer: from,
            },
            RecvTimeoutError::Disconnected => Error::ChannelClosed {
                party: self.me,
                peer: from,
            },
        })
    }
}

/// Run a three-party program on threads connected by in-memory channels.
/// PRF keys are derived from `seed`.
pub fn run_simulated<T, F>(seed: u64, f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    run_simulated_with(seed, DEFAULT_TIMEOUT, f)
}

pub fn run_simulated_with<T, F>(seed: u64, timeout: Duration, f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let keys = PrfSetup::keys_from_seed(seed);
    let transports = sim_mesh(timeout);
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = transports
            .into_iter()
            .map(|t| {
                let f = &f;
                let keys = &keys;
                s.spawn(move || {
                    let id = t.me;
                    let mut party = Party::new(id, Box::new(t), PrfSetup::for_party(id, keys));
                    let out = f(&mut party);
                    // Dropping the party closes its channels and unblocks peers.
                    let stats = party.stats();
                    drop(party);
                    out.map(|o| (o, stats))
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(i, h)| h.join().unwrap_or(Err(Error::PartyPanicked(i))))
            .collect()
    });
    collect_outputs(results)
}

pub(crate) fn collect_outputs<T>(results: Vec<Result<(T, super::PartyStats)>>) -> Result<RunOutput<T>> {
    let mut outputs = Vec::with_capacity(3);
    let mut stats = Vec::with_capacity(3);
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok((o, s)) => {
                outputs.push(o);
                stats.push(s);
            }
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(root_cause(errors));
    }
    let outputs: [T; 3] = outputs.try_into().ok().expect("three outputs");
    let stats: [_; 3] = stats.try_into().expect("three stats");
    Ok(RunOutput {
        outputs,
        stats: CommStats::new("", stats),
    })
}
