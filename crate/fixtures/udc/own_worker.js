var jobs = {};
jobs["resize"] = function (task) {
  log("resize: start");
  var size = task.size;
  scale(size);
  log("resize: done");
  let run = jobs[task.kind];
  if (jobs.hasOwnProperty(task.kind)) {
    run(task);
  }
};
var onTask = function (event) {
  var task = JSON.parse(event.data);
  jobs["resize"](task);
};
