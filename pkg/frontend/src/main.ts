// Browser entry point: wires the API, scene, session channel, code pane,
// and embed bridge into the DOM. All state flows through the ViewModel.
import * as THREE from "three";
import { ApiClient } from "./api";
import { EmbedBridge, detectHost } from "./bridge";
import { openFile, overlaysFor } from "./codepane";
import { Interaction, emitInteraction, fileForEntity } from "./interactions";
import { SnapshotPoller } from "./poller";
import { CityScene } from "./scene";
import { SessionChannel } from "./session";
import { EventKind, SessionEvent } from "./types";
import {
  applyKind,
  applyLocalEcho,
  applyRemoteEvent,
  initialViewModel,
  prunePings,
  sessionFromDoc,
  ViewModel,
} from "./viewmodel";

const WORKSPACE_BASE = "/workspace/";

class App {
  vm: ViewModel = initialViewModel();
  api = new ApiClient("");
  bridge = new EmbedBridge(detectHost(window));
  scene = new CityScene();
  channel: SessionChannel | null = null;
  poller: SnapshotPoller | null = null;
  renderer: THREE.WebGLRenderer;
  camera: THREE.PerspectiveCamera;
  three = new THREE.Scene();
  raycaster = new THREE.Raycaster();
  intervalMs = 10_000;
  token: string | null = null;

  constructor() {
    const canvas = document.getElementById("city") as HTMLCanvasElement;
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.1, 500);
    this.camera.position.set(30, 40, 55);
    this.camera.lookAt(15, 0, 15);
    this.three.background = new THREE.Color(0x10141c);
    this.three.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(40, 80, 20);
    this.three.add(sun);
    this.three.add(this.scene.root);
    this.resize();
    window.addEventListener("resize", () => this.resize());
    canvas.addEventListener("click", (ev) => this.pick(ev, false));
    canvas.addEventListener("dblclick", (ev) => this.pick(ev, true));
    this.bridge.listen(window, (message) => {
      if (message.type === "focusEntity") {
        this.vm = { ...this.vm, selectedEntity: message.payload.entity_id };
      }
    });
    this.animate();
  }

  resize(): void {
    const canvas = this.renderer.domElement;
    const width = canvas.clientWidth || canvas.parentElement?.clientWidth || 800;
    const height = canvas.clientHeight || 520;
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  animate = (): void => {
    requestAnimationFrame(this.animate);
    this.vm = prunePings(this.vm, Date.now());
    this.scene.applyViewModel(this.vm, Date.now());
    this.renderer.render(this.three, this.camera);
  };

  pick(ev: MouseEvent, ping: boolean): void {
    const canvas = this.renderer.domElement;
    const bounds = canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((ev.clientX - bounds.left) / bounds.width) * 2 - 1,
      -((ev.clientY - bounds.top) / bounds.height) * 2 + 1
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObjects(this.scene.root.children, false);
    const hit = hits.find((h) => h.object.userData?.entityId || h.object.userData?.kind === "arc");
    if (!hit) return;
    const data = hit.object.userData as any;
    if (data.kind === "arc") {
      this.handle({ kind: "comm_line_click", entityId: data.target });
    } else if (ping) {
      this.handle({ kind: "ping", entityId: data.entityId });
    } else if (data.kind === "district") {
      const open = this.vm.session.openPackages.includes(data.entityId);
      this.handle({
        kind: open ? "close_package" : "open_package",
        entityId: data.entityId,
      });
    } else {
      this.vm = { ...this.vm, selectedEntity: data.entityId };
      this.handle({ kind: "building_click", entityId: data.entityId });
      void this.reveal(data.entityId);
    }
  }

  handle(interaction: Interaction): void {
    const outbound = emitInteraction(interaction, this.bridge.embedded);
    if (outbound.type === "event") {
      this.submit(outbound.kind, outbound.payload);
    } else if (outbound.type === "bridge") {
      this.bridge.toHost(outbound.message.type, outbound.message.payload);
    } else {
      void this.reveal(outbound.entityId);
    }
  }

  submit(kind: EventKind, payload: any): void {
    if (!this.channel) return;
    this.channel.submit(kind, payload);
    this.vm = applyLocalEcho(this.vm, kind, payload, Date.now());
    this.renderSidebar();
  }

  onRemote = (event: SessionEvent): void => {
    this.vm = applyRemoteEvent(this.vm, event, Date.now());
    if (this.vm.needsResync && this.channel) {
      this.vm = { ...this.vm, needsResync: false };
      this.channel.resync(this.vm.lastSeq);
    }
    if (event.kind === "TextSelection") {
      if (this.bridge.embedded) {
        this.bridge.toHost("highlightSelection", {
          file: event.payload.file,
          range: event.payload.range,
          user: event.origin_user,
        });
      } else {
        this.renderCodePane();
      }
    }
    this.renderSidebar();
  };

  async reveal(entityId: string): Promise<void> {
    if (this.bridge.embedded) {
      this.bridge.toHost("revealInEditor", { entity_id: entityId });
      return;
    }
    const located = fileForEntity(entityId);
    if (!located || !this.vm.lastSnapshotId) return;
    const text = await this.api.fileText(WORKSPACE_BASE, located.file);
    if (text == null) return;
    const markers = await this.api
      .highlights(this.vm.lastSnapshotId, located.file)
      .catch(() => []);
    const classMarker = markers.find((m) => m.entity_id === entityId);
    this.vm = {
      ...this.vm,
      codePane: openFile(
        this.vm.codePane,
        located.file,
        text,
        markers,
        classMarker ? classMarker.line : null
      ),
    };
    this.renderCodePane();
  }

  async start(): Promise<void> {
    const systems = await this.api.listSystems();
    const select = document.getElementById("system") as HTMLSelectElement;
    select.innerHTML = systems
      .map((s) => `<option value="${s.system_id}">${s.display_name}</option>`)
      .join("");
    const chosen = () => select.value || (systems[0] && systems[0].system_id);
    const connect = async () => {
      const system = chosen();
      if (!system) return;
      this.poller?.stop();
      this.poller = new SnapshotPoller(this.api, system, (snapshot, layout) => {
        this.vm = { ...this.vm, layout, lastSnapshotId: snapshot.snapshot_id };
        this.scene.render(layout, snapshot.snapshot_id);
        if (this.bridge.embedded) {
          this.bridge.toHost("snapshotUpdated", { snapshot_id: snapshot.snapshot_id });
        }
      });
      this.poller.start(this.intervalMs);
    };
    select.addEventListener("change", () => void connect());
    await connect();

    document.getElementById("host")!.addEventListener("click", async () => {
      const user = this.userName();
      this.token = await this.api.createSession(user);
      this.joinChannel(this.token, user, 0, true);
    });
    document.getElementById("join")!.addEventListener("click", () => {
      const token = (document.getElementById("token") as HTMLInputElement).value.trim();
      if (token) {
        this.token = token;
        this.joinChannel(token, this.userName(), 0, false);
      }
    });
  }

  userName(): string {
    const input = document.getElementById("user") as HTMLInputElement;
    return input.value.trim() || "user-" + Math.floor(Math.random() * 1000);
  }

  joinChannel(token: string, user: string, resume: number, hosting: boolean): void {
    this.channel?.close();
    this.vm = { ...this.vm, user };
    void this.api.sessionState(token).then((doc) => {
      let session = sessionFromDoc(doc);
      if (!session.roster.includes(user)) {
        // our own UserJoined is assigned on connect and never echoed back
        session = applyKind(session, "UserJoined", { user }, user);
      }
      this.vm = { ...this.vm, session, lastSeq: doc.last_seq };
      this.channel = new SessionChannel({
        wsBaseUrl:
          (location.protocol === "https:" ? "wss://" : "ws://") + location.host,
        token,
        user,
        socketFactory: (url) => new WebSocket(url) as any,
        onEvent: this.onRemote,
        onStatus: (status) => {
          this.vm = {
            ...this.vm,
            connection: status === "live" ? "live" : "connecting",
          };
          this.renderSidebar();
        },
      });
      this.channel.connect(this.vm.lastSeq);
      (document.getElementById("token") as HTMLInputElement).value = token;
      this.renderSidebar();
    });
  }

  renderSidebar(): void {
    const roster = document.getElementById("roster")!;
    roster.textContent = this.vm.session.roster.join(", ") || "(no session)";
    const popups = document.getElementById("popups")!;
    popups.textContent = Object.keys(this.vm.session.popups).join(", ") || "-";
    const status = document.getElementById("status")!;
    status.textContent = this.vm.connection;
  }

  renderCodePane(): void {
    const pane = document.getElementById("code")!;
    const { lines, markers, file, scrollLine } = this.vm.codePane;
    const byLine = new Map(markers.map((m) => [m.line, m]));
    const overlays = overlaysFor(this.vm);
    const overlayLines = new Set<number>();
    for (const range of Object.values(overlays)) {
      const start = (range as any)?.start_line ?? null;
      const end = (range as any)?.end_line ?? start;
      if (start != null) {
        for (let line = start; line <= (end ?? start); line++) overlayLines.add(line);
      }
    }
    document.getElementById("filename")!.textContent = file ?? "(no file)";
    pane.innerHTML = lines
      .map((text, i) => {
        const line = i + 1;
        const marker = byLine.get(line);
        const gutter = marker ? `<span class="lens">${marker.label}</span>` : "";
        const cls = overlayLines.has(line) ? "line remote-selected" : "line";
        return `<div class="${cls}" data-line="${line}"><span class="no">${line}</span>${gutter}<code>${escapeHtml(
          text
        )}</code></div>`;
      })
      .join("");
    if (scrollLine != null) {
      pane.querySelector(`[data-line="${scrollLine}"]`)?.scrollIntoView({ block: "center" });
    }
  }
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

const app = new App();
void app.start();
(window as any).tracecity = app;
