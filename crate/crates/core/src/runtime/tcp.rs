//! TCP transport.
//!
//! A logical message is a sequence of frames `[u32 LE length][payload]`.
//! Frames are at most `chunk` bytes; a frame shorter than `chunk` ends the
//! message, so a message whose length is a multiple of `chunk` is followed by
//! an empty frame. Parties connect to lower ids and accept from higher ids,
//! announcing themselves with a one-byte hello.

use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError};

use super::sim::collect_outputs;
use super::{NetConfig, Party, PartyId, PartyStats, PrfSetup, RunOutput, Transport, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};

pub const MAX_FRAME: usize = 64 << 20;

pub struct TcpTransport {
    me: PartyId,
    writers: [Option<TcpStream>; 3],
    inbox: [Option<Receiver<io::Result<Vec<u8>>>>; 3],
    timeout: Duration,
    chunk: usize,
}

pub(crate) fn write_message<W: Write>(w: &mut W, payload: &[u8], chunk: usize) -> io::Result<()> {
    let mut rest = payload;
    loop {
        let n = rest.len().min(chunk);
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&rest[..n])?;
        rest = &rest[n..];
        if n < chunk {
            break;
        }
    }
    w.flush()
}

pub(crate) fn read_message<R: Read>(r: &mut R, chunk: usize) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    loop {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let n = u32::from_le_bytes(len) as usize;
        if n > chunk {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("frame of {n} bytes exceeds limit {chunk}"),
            ));
        }
        let start = out.len();
        out.resize(start + n, 0);
        r.read_exact(&mut out[start..])?;
        if n < chunk {
            return Ok(out);
        }
    }
}

fn net_err(party: PartyId, peer: PartyId) -> impl FnOnce(io::Error) -> Error {
    move |source| Error::Network { party, peer, source }
}

fn connect_with_retry(addr: &str, deadline: Instant) -> io::Result<TcpStream> {
    loop {
        let attempt = addr
            .to_socket_addrs()
            .and_then(|mut a| {
                a.next()
                    .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, "no address"))
            })
            .and_then(|a| TcpStream::connect_timeout(&a, Duration::from_millis(500)));
        match attempt {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => thread::sleep(Duration::from_millis(20)),
        }
    }
}

fn accept_until(listener: &TcpListener, deadline: Instant) -> io::Result<TcpStream> {
    listener.set_nonblocking(true)?;
    loop {
        match listener.accept() {
            Ok((s, _)) => {
                s.set_nonblocking(false)?;
                return Ok(s);
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(io::Error::new(io::ErrorKind::TimedOut, "no peer connected"));
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e),
        }
    }
}

impl TcpTransport {
    pub fn establish(me: PartyId, listener: TcpListener, addrs: &[String; 3], timeout: Duration) -> Result<Self> {
        Self::establish_with_chunk(me, listener, addrs, timeout, MAX_FRAME)
    }

    pub fn establish_with_chunk(
        me: PartyId,
        listener: TcpListener,
        addrs: &[String; 3],
        timeout: Duration,
        chunk: usize,
    ) -> Result<Self> {
        assert!(chunk > 0 && chunk <= u32::MAX as usize);
        let deadline = Instant::now() + timeout;
        let mut streams: [Option<TcpStream>; 3] = Default::default();

        for peer in PartyId::ALL.into_iter().filter(|p| *p < me) {
            let mut s = connect_with_retry(&addrs[peer.index()], deadline).map_err(net_err(me, peer))?;
            s.write_all(&[me.index() as u8]).map_err(net_err(me, peer))?;
            streams[peer.index()] = Some(s);
        }
        for expected in PartyId::ALL.into_iter().filter(|p| *p > me) {
            let mut s = accept_until(&listener, deadline).map_err(net_err(me, expected))?;
            s.set_read_timeout(Some(timeout)).map_err(net_err(me, expected))?;
            let mut hello = [0u8; 1];
            s.read_exact(&mut hello).map_err(net_err(me, expected))?;
            s.set_read_timeout(None).map_err(net_err(me, expected))?;
            let peer = PartyId::new(hello[0] as usize)?;
            if peer <= me || streams[peer.index()].is_some() {
                return Err(Error::Network {
                    party: me,
                    peer,
                    source: io::Error::new(io::ErrorKind::InvalidData, "unexpected hello"),
                });
            }
            streams[peer.index()] = Some(s);
        }

        let mut writers: [Option<TcpStream>; 3] = Default::default();
        let mut inbox: [Option<Receiver<io::Result<Vec<u8>>>>; 3] = Default::default();
        for peer in PartyId::ALL.into_iter().filter(|p| *p != me) {
            let s = streams[peer.index()].take().expect("connected");
            s.set_nodelay(true).map_err(net_err(me, peer))?;
            let mut reader = s.try_clone().map_err(net_err(me, peer))?;
            let (tx, rx) = unbounded();
            thread::Builder::new()
                .name(format!("{me}-recv-{peer}"))
                .spawn(move || loop {
                    match read_message(&mut reader, chunk) {
                        Ok(m) => {
                            if tx.send(Ok(m)).is_err() {
                                break;
                            }
                        }
                        Err(e) => {
                            let _ = tx.send(Err(e));
                            break;
                        }
                    }
                })
                .map_err(net_err(me, peer))?;
            writers[peer.index()] = Some(s);
            inbox[peer.index()] = Some(rx);
        }
        Ok(TcpTransport {
            me,
            writers,
            inbox,
            timeout,
            chunk,
        })
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, to: PartyId, payload: Vec<u8>) -> Result<()> {
        let me = self.me;
        let w = self.writers[to.index()]
            .as_mut()
            .ok_or(Error::ChannelClosed { party: me, peer: to })?;
        write_message(w, &payload, self.chunk).map_err(net_err(me, to))
    }

    fn recv(&mut self, from: PartyId) -> Result<Vec<u8>> {
        let me = self.me;
        let rx = self.inbox[from.index()]
            .as_ref()
            .ok_or(Error::ChannelClosed { party: me, peer: from })?;
        match rx.recv_timeout(self.timeout) {
            Ok(Ok(m)) => Ok(m),
            Ok(Err(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
                Err(Error::ChannelClosed { party: me, peer: from })
            }
            Ok(Err(e)) => Err(Error::Network {
                party: me,
                peer: from,
                source: e,
            }),
            Err(RecvTimeoutError::Timeout) => Err(Error::ProtocolOrder { party: me, peer: from }),
            Err(RecvTimeoutError::Disconnected) => Err(Error::ChannelClosed { party: me, peer: from }),
        }
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        // Half-close: peers see end of stream after our last message and their
        // reader threads exit once they close their side too.
        for w in self.writers.iter().flatten() {
            let _ = w.shutdown(Shutdown::Write);
        }
    }
}

/// Run one party of a program over TCP using the addresses in `config`.
pub fn run_tcp<T, F>(config: &NetConfig, me: PartyId, f: F) -> Result<(T, PartyStats)>
where
    F: FnOnce(&mut Party) -> Result<T>,
{
    let addr = &config.parties[me.index()];
    let listener = TcpListener::bind(addr).map_err(net_err(me, me))?;
    let transport = TcpTransport::establish(me, listener, &config.parties, config.timeout)?;
    let mut party = Party::new(me, Box::new(transport), PrfSetup::from_seed(me, config.seed));
    let out = f(&mut party)?;
    Ok((out, party.stats()))
}

/// Run all three parties in this process, connected over loopback TCP.
pub fn run_tcp_local<T, F>(seed: u64, f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    run_tcp_local_with_chunk(seed, MAX_FRAME, f)
}

pub fn run_tcp_local_with_chunk<T, F>(seed: u64, chunk: usize, f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let mut listeners = Vec::with_capacity(3);
    let mut addrs: [String; 3] = Default::default();
    for (i, a) in addrs.iter_mut().enumerate() {
        let me = PartyId::new(i)?;
        let l = TcpListener::bind("127.0.0.1:0").map_err(net_err(me, me))?;
        *a = l.local_addr().map_err(net_err(me, me))?.to_string();
        listeners.push(l);
    }
    let keys = PrfSetup::keys_from_seed(seed);
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let (f, keys, addrs) = (&f, &keys, &addrs);
                s.spawn(move || {
                    let me = PartyId::new(i)?;
                    let t = TcpTransport::establish_with_chunk(me, l, addrs, DEFAULT_TIMEOUT, chunk)?;
                    let mut party = Party::new(me, Box::new(t), PrfSetup::for_party(me, keys));
                    let out = f(&mut party)?;
                    Ok((out, party.stats()))
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::RingElem;
    use crate::runtime::run_simulated;

    #[test]
    fn framing_round_trips_at_chunk_boundaries() {
        for len in [0usize, 1, 7, 8, 9, 16, 17, 24] {
            let payload: Vec<u8> = (0..len as u8).collect();
            let mut buf = Vec::new();
            write_message(&mut buf, &payload, 8).unwrap();
            let frames = len / 8 + 1;
            assert_eq!(buf.len(), len + 4 * frames);
            let got = read_message(&mut buf.as_slice(), 8).unwrap();
            assert_eq!(got, payload);
        }
    }

    #[test]
    fn oversized_frame_is_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&100u32.to_le_bytes());
        buf.extend_from_slice(&[0u8; 100]);
        let err = read_message(&mut buf.as_slice(), 8).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidData);
    }

    #[test]
    fn truncated_stream_is_eof() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&5u32.to_le_bytes());
        buf.extend_from_slice(&[1, 2]);
        let err = read_message(&mut buf.as_slice(), 8).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::UnexpectedEof);
    }

    fn ring_exchange(p: &mut Party) -> Result<Vec<u64>> {
        let id = p.id();
        let vals: Vec<RingElem> = (0..37u64).map(|k| RingElem(k * 1000 + id.index() as u64)).collect();
        p.send_ring(id.next(), &vals)?;
        p.send_bits(id.prev(), &[1, 0, 1], 1)?;
        let a = p.recv_ring(id.prev(), 37)?;
        let b = p.recv_bits(id.next(), 3, 1)?;
        p.end_round();
        Ok(a.into_iter().map(|r| r.0).chain(b).collect())
    }

    #[test]
    fn tcp_matches_simulator() {
        let sim = run_simulated(5, ring_exchange).unwrap();
        let tcp = run_tcp_local(5, ring_exchange).unwrap();
        assert_eq!(sim.outputs, tcp.outputs);
        assert_eq!(sim.stats.parties, tcp.stats.parties);
    }

    #[test]
    fn small_chunks_carry_large_messages() {
        let sim = run_simulated(6, ring_exchange).unwrap();
        let tcp = run_tcp_local_with_chunk(6, 16, ring_exchange).unwrap();
        assert_eq!(sim.outputs, tcp.outputs);
    }

    #[test]
    fn early_exit_of_a_peer_is_reported() {
        let err = run_tcp_local(7, |p| {
            if p.id() == PartyId::P0 {
                p.recv_ring(PartyId::P1, 1)?;
            }
            Ok(())
        })
        .unwrap_err();
        assert!(matches!(err, Error::ChannelClosed { party, .. } if party == PartyId::P0));
    }
}
